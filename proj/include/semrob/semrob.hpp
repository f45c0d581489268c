#pragma once

#include "semrob/attacks.hpp"
#include "semrob/bayes.hpp"
#include "semrob/emit.hpp"
#include "semrob/experiment.hpp"
#include "semrob/graph.hpp"
#include "semrob/graph_io.hpp"
#include "semrob/graphgen.hpp"
#include "semrob/label_prop.hpp"
#include "semrob/metrics.hpp"
#include "semrob/models.hpp"
#include "semrob/train.hpp"
