#pragma once

#include "kmpc/arx.hpp"
#include "kmpc/basis.hpp"
#include "kmpc/config.hpp"
#include "kmpc/csv.hpp"
#include "kmpc/experiments.hpp"
#include "kmpc/lasso.hpp"
#include "kmpc/linalg.hpp"
#include "kmpc/model.hpp"
#include "kmpc/mpc.hpp"
#include "kmpc/noise.hpp"
#include "kmpc/plants.hpp"
#include "kmpc/prediction.hpp"
#include "kmpc/qp.hpp"
#include "kmpc/regression.hpp"
#include "kmpc/serialize.hpp"
#include "kmpc/signals.hpp"
#include "kmpc/snapshots.hpp"
#include "kmpc/types.hpp"
