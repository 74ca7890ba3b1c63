#pragma once

// Umbrella header: recovery of deterministic environment dynamics from
// solved value tables, with accuracy certificates and separability analysis.

#include "valdyn/continuous.hpp"
#include "valdyn/errors.hpp"
#include "valdyn/experiment.hpp"
#include "valdyn/gridworld.hpp"
#include "valdyn/inference.hpp"
#include "valdyn/mdp.hpp"
#include "valdyn/rng.hpp"
#include "valdyn/separability.hpp"
#include "valdyn/serialization.hpp"
#include "valdyn/textio.hpp"
