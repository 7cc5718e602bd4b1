// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include "prunelab/core/checkpoint.hpp"
#include "prunelab/core/errors.hpp"
#include "prunelab/core/layers.hpp"
#include "prunelab/core/loss.hpp"
#include "prunelab/core/network.hpp"
#include "prunelab/core/rng.hpp"
#include "prunelab/core/sgd.hpp"
#include "prunelab/core/tensor.hpp"
#include "prunelab/data/csv.hpp"
#include "prunelab/data/dataset.hpp"
#include "prunelab/data/digits.hpp"
#include "prunelab/data/idx.hpp"
#include "prunelab/data/synthetic.hpp"
#include "prunelab/exp/config.hpp"
#include "prunelab/exp/report.hpp"
#include "prunelab/exp/runner.hpp"
#include "prunelab/exp/sweep.hpp"
#include "prunelab/prune/criteria.hpp"
#include "prunelab/prune/engine.hpp"
#include "prunelab/prune/mask.hpp"
#include "prunelab/schedule/plan.hpp"
#include "prunelab/train/early_stop.hpp"
#include "prunelab/train/finetune.hpp"
