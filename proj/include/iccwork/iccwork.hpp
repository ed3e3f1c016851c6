#pragma once

#include "iccwork/config.hpp"
#include "iccwork/dmrg.hpp"
#include "iccwork/errors.hpp"
#include "iccwork/harmonic.hpp"
#include "iccwork/io.hpp"
#include "iccwork/model.hpp"
#include "iccwork/oracle.hpp"
#include "iccwork/runner.hpp"
#include "iccwork/scaling.hpp"
#include "iccwork/verify.hpp"
