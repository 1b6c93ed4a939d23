// qworklab.hpp — umbrella header

#pragma once

#include "qworklab/errors.hpp"
#include "qworklab/format.hpp"
#include "qworklab/operator_core.hpp"
#include "qworklab/atoms.hpp"
#include "qworklab/quasiprob.hpp"
#include "qworklab/models.hpp"
#include "qworklab/advantage.hpp"
#include "qworklab/detector.hpp"
#include "qworklab/tpm_lg.hpp"
#include "qworklab/json_io.hpp"
