#ifndef RANKCLAP_RANKCLAP_HPP_
#define RANKCLAP_RANKCLAP_HPP_

#include "rankclap/dataset.hpp"
#include "rankclap/errors.hpp"
#include "rankclap/eval.hpp"
#include "rankclap/labels.hpp"
#include "rankclap/losses.hpp"
#include "rankclap/model.hpp"
#include "rankclap/numkit.hpp"
#include "rankclap/trainer.hpp"

#endif  // RANKCLAP_RANKCLAP_HPP_
