#pragma once

#include "smartdx/data_model.hpp"
#include "smartdx/error.hpp"
#include "smartdx/evaluation.hpp"
#include "smartdx/features.hpp"
#include "smartdx/parallel.hpp"
#include "smartdx/report.hpp"
#include "smartdx/rng.hpp"
#include "smartdx/scaler.hpp"
#include "smartdx/selection.hpp"
#include "smartdx/spectral.hpp"
#include "smartdx/svm.hpp"
#include "smartdx/synth.hpp"
