#pragma once

#include "pknn/benchmark.hpp"
#include "pknn/csv.hpp"
#include "pknn/cv.hpp"
#include "pknn/dataset.hpp"
#include "pknn/dump.hpp"
#include "pknn/error.hpp"
#include "pknn/knn.hpp"
#include "pknn/korea.hpp"
#include "pknn/laplace.hpp"
#include "pknn/likelihood.hpp"
#include "pknn/mcmc.hpp"
#include "pknn/metrics.hpp"
#include "pknn/neighbours.hpp"
