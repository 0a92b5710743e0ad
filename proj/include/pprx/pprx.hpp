#pragma once

#include "pprx/classifier.hpp"
#include "pprx/data.hpp"
#include "pprx/embeddings.hpp"
#include "pprx/encode.hpp"
#include "pprx/errors.hpp"
#include "pprx/explain.hpp"
#include "pprx/parallel.hpp"
#include "pprx/ppr.hpp"
#include "pprx/textgraph.hpp"
