// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stegano/backend.hpp"
#include "stegano/chaos.hpp"
#include "stegano/ddim.hpp"
#include "stegano/error.hpp"
#include "stegano/image.hpp"
#include "stegano/image_io.hpp"
#include "stegano/integrity.hpp"
#include "stegano/pipeline.hpp"
#include "stegano/rdh.hpp"
#include "stegano/sm3.hpp"
