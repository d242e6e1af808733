#pragma once

#include "gpeopt/core/control.hpp"
#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/core/grid.hpp"
#include "gpeopt/core/parallel.hpp"
#include "gpeopt/potentials/trap.hpp"
#include "gpeopt/gpe/ground_state.hpp"
#include "gpeopt/gpe/observables.hpp"
#include "gpeopt/gpe/propagate.hpp"
#include "gpeopt/adjoint/adjoint.hpp"
#include "gpeopt/optim/optimizer.hpp"
#include "gpeopt/bdg/bdg.hpp"
#include "gpeopt/bdg/excitation.hpp"
#include "gpeopt/reduction/reduction1d.hpp"
#include "gpeopt/io/units.hpp"
#include "gpeopt/io/config.hpp"
#include "gpeopt/io/output.hpp"
#include "gpeopt/io/run.hpp"
