#pragma once

#include <hgplvm/datasets.hpp>
#include <hgplvm/errors.hpp>
#include <hgplvm/io.hpp>
#include <hgplvm/kernel.hpp>
#include <hgplvm/lorentz.hpp>
#include <hgplvm/metrics.hpp>
#include <hgplvm/objectives.hpp>
#include <hgplvm/optimizer.hpp>
#include <hgplvm/wrapped_gaussian.hpp>
