#pragma once

#include "fragmig/common.hpp"
#include "fragmig/topology.hpp"
#include "fragmig/nsfnet.hpp"
#include "fragmig/workload.hpp"
#include "fragmig/state.hpp"
#include "fragmig/fragmentation.hpp"
#include "fragmig/correlation.hpp"
#include "fragmig/mhgat.hpp"
#include "fragmig/training.hpp"
#include "fragmig/dataset.hpp"
#include "fragmig/migration.hpp"
#include "fragmig/simulator.hpp"
#include "fragmig/report.hpp"
