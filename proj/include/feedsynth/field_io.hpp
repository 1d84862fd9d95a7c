/*
 Copyright 2026 The feedsynth Authors

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

#ifndef FEEDSYNTH_FIELD_IO_HPP_
#define FEEDSYNTH_FIELD_IO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "feedsynth/grid.hpp"

namespace feedsynth
{

/// Shortest text that round-trips a double (printf %.17g).
std::string format_double(double v);

/**
 * Field snapshot CSV: header `t,x1..xN,c1..cc`, one row per (time, node) in
 * row-major order, every value printed with 17 significant digits.
 */
void write_field_csv(const GridField &field, std::ostream &os);
void write_field_csv(const GridField &field, const std::string &path);

/// JSON sidecar with grid box, node counts, time grid and component count.
void write_field_metadata(const GridField &field, const std::string &path,
                          const std::string &description);

/// Plain numeric table, as read back from any CSV this library writes.
struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_table_csv(const CsvTable &table, std::ostream &os);
void write_table_csv(const CsvTable &table, const std::string &path);
CsvTable read_table_csv(std::istream &is);
CsvTable read_table_csv(const std::string &path);

/**
 * Rebuilds a field from its snapshot CSV. The header and every coordinate
 * column are checked against the given layout; mismatches throw
 * InvalidArgument.
 */
GridField read_field_csv(const std::string &path, const Grid &grid, const TimeGrid &time_grid,
                         int components);
GridField field_from_table(const CsvTable &table, const Grid &grid, const TimeGrid &time_grid,
                           int components);

} // namespace feedsynth

#endif // FEEDSYNTH_FIELD_IO_HPP_
