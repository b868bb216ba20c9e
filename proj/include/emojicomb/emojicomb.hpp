#pragma once

#include "emojicomb/cli.hpp"
#include "emojicomb/corpus.hpp"
#include "emojicomb/dataset_io.hpp"
#include "emojicomb/emoji_text.hpp"
#include "emojicomb/error.hpp"
#include "emojicomb/evaluation.hpp"
#include "emojicomb/prob_model.hpp"
#include "emojicomb/strategies.hpp"
#include "emojicomb/utf8.hpp"
