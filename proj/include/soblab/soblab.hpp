#pragma once

#include "soblab/bump.hpp"
#include "soblab/config.hpp"
#include "soblab/dataset.hpp"
#include "soblab/dual.hpp"
#include "soblab/error.hpp"
#include "soblab/experiments.hpp"
#include "soblab/geometry.hpp"
#include "soblab/interpolant.hpp"
#include "soblab/kdtree.hpp"
#include "soblab/model.hpp"
#include "soblab/morrey.hpp"
#include "soblab/parallel.hpp"
#include "soblab/quadrature.hpp"
#include "soblab/random.hpp"
#include "soblab/risk.hpp"
#include "soblab/rkhs.hpp"
#include "soblab/stats.hpp"
