/*
 Copyright 2026 The CKNet Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef CKNET_CSV_HPP
#define CKNET_CSV_HPP

#include <string>
#include <vector>

namespace cknet {

struct NumericTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);
double parse_double(const std::string& text);

// Comma-separated, first line is the header, every other line numeric.
NumericTable read_numeric_csv(const std::string& path);
void write_numeric_csv(const std::string& path, const NumericTable& table);

std::vector<std::string> split(const std::string& line, char sep);
std::string trim(const std::string& s);

}  // namespace cknet

#endif  // CKNET_CSV_HPP
