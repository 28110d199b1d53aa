#pragma once

#include "dlsim/band_matrix.hpp"
#include "dlsim/bandmodel.hpp"
#include "dlsim/bases.hpp"
#include "dlsim/dynamics.hpp"
#include "dlsim/errors.hpp"
#include "dlsim/fields.hpp"
#include "dlsim/observables.hpp"
#include "dlsim/spectral.hpp"
#include "dlsim/units.hpp"
#include "dlsim/version.hpp"
