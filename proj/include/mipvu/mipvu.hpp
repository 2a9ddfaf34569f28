#pragma once

#include "mipvu/config.hpp"
#include "mipvu/corpus_model.hpp"
#include "mipvu/dict_pipeline.hpp"
#include "mipvu/embedding_store.hpp"
#include "mipvu/error.hpp"
#include "mipvu/format.hpp"
#include "mipvu/io.hpp"
#include "mipvu/metrics_engine.hpp"
#include "mipvu/prediction_adapters.hpp"
#include "mipvu/rng.hpp"
#include "mipvu/version.hpp"
