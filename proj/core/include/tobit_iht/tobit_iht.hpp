#pragma once

#include "tobit_iht/datagen.hpp"
#include "tobit_iht/dataset.hpp"
#include "tobit_iht/error.hpp"
#include "tobit_iht/eval.hpp"
#include "tobit_iht/io.hpp"
#include "tobit_iht/model.hpp"
#include "tobit_iht/solver_dist.hpp"
#include "tobit_iht/solver_local.hpp"
#include "tobit_iht/sparsify.hpp"
#include "tobit_iht/special.hpp"
#include "tobit_iht/types.hpp"
#include "tobit_iht/version.hpp"
