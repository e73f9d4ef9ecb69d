#pragma once

#include "wmfc/adjoint.hpp"
#include "wmfc/control.hpp"
#include "wmfc/errors.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/grid.hpp"
#include "wmfc/io.hpp"
#include "wmfc/lq_solver.hpp"
#include "wmfc/measures.hpp"
#include "wmfc/model.hpp"
#include "wmfc/models/functional.hpp"
#include "wmfc/models/lq.hpp"
#include "wmfc/models/smooth.hpp"
#include "wmfc/regression.hpp"
#include "wmfc/stats.hpp"
#include "wmfc/validate.hpp"
#include "wmfc/variation.hpp"
#include "wmfc/acceptance.hpp"
