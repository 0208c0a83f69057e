// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "posecoach/alignment.hpp"
#include "posecoach/assessment.hpp"
#include "posecoach/config.hpp"
#include "posecoach/correction.hpp"
#include "posecoach/errors.hpp"
#include "posecoach/io.hpp"
#include "posecoach/kinematics.hpp"
#include "posecoach/normalization.hpp"
#include "posecoach/pipeline.hpp"
#include "posecoach/skeleton.hpp"
#include "posecoach/sttf.hpp"
#include "posecoach/sttf_io.hpp"
#include "posecoach/synth.hpp"
