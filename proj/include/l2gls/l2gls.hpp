#pragma once

// Umbrella header.

#include "l2gls/candidate_lists.hpp"
#include "l2gls/errors.hpp"
#include "l2gls/gls.hpp"
#include "l2gls/harness.hpp"
#include "l2gls/instance.hpp"
#include "l2gls/operators.hpp"
#include "l2gls/policy.hpp"
#include "l2gls/rng.hpp"
#include "l2gls/search.hpp"
#include "l2gls/solution.hpp"
