#pragma once

#include "dnr/checkpoint.hpp"
#include "dnr/corpus.hpp"
#include "dnr/crf.hpp"
#include "dnr/ddi_xml.hpp"
#include "dnr/error.hpp"
#include "dnr/evaluation.hpp"
#include "dnr/io.hpp"
#include "dnr/lstm.hpp"
#include "dnr/model.hpp"
#include "dnr/numeric.hpp"
#include "dnr/report.hpp"
#include "dnr/rnn.hpp"
#include "dnr/tags.hpp"
#include "dnr/training.hpp"
#include "dnr/vocabulary.hpp"
