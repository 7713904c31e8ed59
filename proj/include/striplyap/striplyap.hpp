#pragma once

#include "batch_means.hpp"
#include "errors.hpp"
#include "frames.hpp"
#include "io.hpp"
#include "lyapunov.hpp"
#include "model.hpp"
#include "normalform.hpp"
#include "perturbative.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "trajectory.hpp"
#include "verify.hpp"
