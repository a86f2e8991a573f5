// Copyright 2026 The biglearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace biglearn {

// "%.17g": enough digits for an exact double round-trip.
std::string format_double(double v);

std::string format_list(const std::vector<double>& values, const char* sep = ", ");
std::string format_list(const Eigen::VectorXd& values, const char* sep = ", ");

// JSON array literal of doubles with 17 significant digits; non-finite
// values are written as null.
std::string json_array(const Eigen::VectorXd& values);
std::string json_string(const std::string& s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace biglearn
