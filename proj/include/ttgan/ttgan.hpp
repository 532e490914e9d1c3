#pragma once

#include "ttgan/classify.hpp"
#include "ttgan/core.hpp"
#include "ttgan/data.hpp"
#include "ttgan/gan.hpp"
#include "ttgan/harness.hpp"
#include "ttgan/metrics.hpp"
#include "ttgan/nn.hpp"
#include "ttgan/preprocess.hpp"
#include "ttgan/resample.hpp"
