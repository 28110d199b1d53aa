#pragma once

#include "dlsim/config.hpp"
#include "dlsim/csv.hpp"
#include "dlsim/runner.hpp"
#include "dlsim/validation.hpp"
