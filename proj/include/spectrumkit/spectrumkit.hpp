#pragma once

#include "basis_search.hpp"
#include "convex.hpp"
#include "distribution.hpp"
#include "entropy_opt.hpp"
#include "errors.hpp"
#include "functionals.hpp"
#include "hypergraph.hpp"
#include "io.hpp"
#include "linalg.hpp"
#include "lp.hpp"
#include "nelder_mead.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "ranks.hpp"
#include "scaling.hpp"
#include "tensor.hpp"
