#pragma once

#include "glancelab/error.hpp"
#include "glancelab/telemetry.hpp"
#include "glancelab/glance_filter.hpp"
#include "glancelab/segmentation.hpp"
#include "glancelab/features.hpp"
#include "glancelab/matrix.hpp"
#include "glancelab/forest.hpp"
#include "glancelab/linear.hpp"
#include "glancelab/validation.hpp"
#include "glancelab/shap.hpp"
#include "glancelab/explain.hpp"
#include "glancelab/synthgen.hpp"
#include "glancelab/experiment.hpp"
#include "glancelab/service.hpp"
