#pragma once

#include "graphbridge/backbone.hpp"
#include "graphbridge/bridges.hpp"
#include "graphbridge/checkpoint.hpp"
#include "graphbridge/common.hpp"
#include "graphbridge/container.hpp"
#include "graphbridge/gradcheck.hpp"
#include "graphbridge/graph.hpp"
#include "graphbridge/harness.hpp"
#include "graphbridge/metrics.hpp"
#include "graphbridge/optim.hpp"
#include "graphbridge/params.hpp"
#include "graphbridge/pretrain.hpp"
#include "graphbridge/sidetune.hpp"
#include "graphbridge/sparse.hpp"
#include "graphbridge/synth.hpp"
#include "graphbridge/tensor.hpp"
