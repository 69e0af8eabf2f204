#pragma once

#include "nnch/field.hpp"
#include "nnch/operators.hpp"
#include "nnch/constitutive.hpp"
#include "nnch/fast_poisson.hpp"
#include "nnch/helmholtz.hpp"
#include "nnch/cahn_hilliard.hpp"
#include "nnch/momentum.hpp"
#include "nnch/stepper.hpp"
#include "nnch/maximal.hpp"
#include "nnch/config.hpp"
#include "nnch/io.hpp"
#include "nnch/driver.hpp"
