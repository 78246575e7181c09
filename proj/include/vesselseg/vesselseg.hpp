#pragma once

#include "vesselseg/components.hpp"
#include "vesselseg/error.hpp"
#include "vesselseg/eval.hpp"
#include "vesselseg/filters.hpp"
#include "vesselseg/neighborhood.hpp"
#include "vesselseg/nifti.hpp"
#include "vesselseg/parallel.hpp"
#include "vesselseg/phantom.hpp"
#include "vesselseg/pipeline.hpp"
#include "vesselseg/threshold.hpp"
#include "vesselseg/volume.hpp"
