// SPDX-License-Identifier: Apache-2.0
//
// cfpos: fingerprint positioning toolkit for cell-free massive MIMO networks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef CFPOS_IO_HPP
#define CFPOS_IO_HPP

#include <string>
#include <vector>

namespace cfpos
{

// printf %.<digits>g formatting.
std::string format_number(double v, int digits);

// Writes the whole file or throws IoError naming the path.
void write_text_file(const std::string &path, const std::string &content);
std::string read_text_file(const std::string &path);

// Comma-separated rows without quoting; the header row is returned as row 0.
std::vector<std::vector<std::string>> read_csv(const std::string &path);

// Strict decimal parse of a whole field; throws ConfigError naming the context.
double parse_number(const std::string &field, const std::string &context);

} // namespace cfpos

#endif
