#pragma once

#include "cdanneal/errors.hpp"
#include "cdanneal/rng.hpp"
#include "cdanneal/pauli.hpp"
#include "cdanneal/model.hpp"
#include "cdanneal/agp.hpp"
#include "cdanneal/exact_dynamics.hpp"
#include "cdanneal/mps.hpp"
#include "cdanneal/tebd.hpp"
#include "cdanneal/harness.hpp"
