/*
 * synthstroke
 *
 * Copyright 2026 The synthstroke Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace synthstroke {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class InvalidArgumentError : public Error
{
  public:
    using Error::Error;
};

/// Two volumes (or a volume and a stack) do not share a voxel grid.
class GridMismatchError : public Error
{
  public:
    using Error::Error;
};

class SingularTransformError : public Error
{
  public:
    using Error::Error;
};

class ZeroVarianceError : public Error
{
  public:
    explicit ZeroVarianceError(double stddev)
        : Error("zero variance: standard deviation " + std::to_string(stddev) + " is below 1e-12"),
          stddev_(stddev)
    {
    }

    double stddev() const noexcept { return stddev_; }

  private:
    double stddev_;
};

class ConfigError : public Error
{
  public:
    using Error::Error;
};

} // namespace synthstroke
