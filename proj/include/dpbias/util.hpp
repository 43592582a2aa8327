//
// Copyright 2026 The dpbias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPBIAS_UTIL_HPP_
#define DPBIAS_UTIL_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpbias {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string trim(const std::string& s);
std::string to_lower_ascii(const std::string& s);
std::vector<std::string> split_whitespace(const std::string& s);
std::vector<std::string> split_on(const std::string& s, char sep);

// Shortest decimal form that round-trips a double ("%.17g" via shortest
// representation probing).
std::string format_double(double x);

// Lines of a text file; throws IoError if the file cannot be read.
std::vector<std::string> read_lines(const std::string& path);
void write_text(const std::string& path, const std::string& content);

// "key = value" files with '#' comments and blank lines ignored.
std::map<std::string, std::string> parse_key_values(const std::string& path);

double parse_double_strict(const std::string& s, const std::string& what);
long parse_long_strict(const std::string& s, const std::string& what);

// FNV-1a over a byte string; used for content fingerprints in run manifests.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t x);

// Mean with a fixed (sorted) summation order so the result does not depend on
// the order in which the samples were produced.
double stable_mean(std::vector<double> values);

bool file_exists(const std::string& path);
void ensure_directory(const std::string& path);

}  // namespace dpbias

#endif  // DPBIAS_UTIL_HPP_
