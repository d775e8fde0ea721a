#pragma once

#include "psm/errors.hpp"
#include "psm/forms.hpp"
#include "psm/generator.hpp"
#include "psm/linalg.hpp"
#include "psm/model.hpp"
#include "psm/oracle.hpp"
#include "psm/runner.hpp"
#include "psm/solver.hpp"
#include "psm/statics.hpp"
