#pragma once

#include "crisp/bench.hpp"
#include "crisp/binary_code.hpp"
#include "crisp/dataset.hpp"
#include "crisp/distance.hpp"
#include "crisp/errors.hpp"
#include "crisp/exact_search.hpp"
#include "crisp/index.hpp"
#include "crisp/index_io.hpp"
#include "crisp/kmeans.hpp"
#include "crisp/multi_sequence.hpp"
#include "crisp/preprocessing.hpp"
#include "crisp/search.hpp"
#include "crisp/synthetic.hpp"
#include "crisp/theory.hpp"
#include "crisp/vecs_io.hpp"
