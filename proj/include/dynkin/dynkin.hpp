#pragma once

#include "dynkin/levy_model.hpp"
#include "dynkin/potential_kernel.hpp"
#include "dynkin/field_synthesis.hpp"
#include "dynkin/spde_sim.hpp"
#include "dynkin/localtime_mc.hpp"
