#pragma once

// Umbrella header.
#include "mistp/errors.hpp"
#include "mistp/rng.hpp"
#include "mistp/objective.hpp"
#include "mistp/directions.hpp"
#include "mistp/optimizers.hpp"
#include "mistp/theory.hpp"
#include "mistp/data.hpp"
#include "mistp/harness.hpp"
#include "mistp/verify.hpp"
