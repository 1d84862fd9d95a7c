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

#include "feedsynth/field_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "feedsynth/errors.hpp"

namespace feedsynth
{

std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace
{

std::ofstream open_out(const std::string &path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

std::vector<std::string> field_header(const GridField &field)
{
  std::vector<std::string> header{"t"};
  for (int d = 0; d < field.grid().dim(); ++d)
    header.push_back("x" + std::to_string(d + 1));
  for (int c = 0; c < field.components(); ++c)
    header.push_back("c" + std::to_string(c + 1));
  return header;
}

} // namespace

void write_field_csv(const GridField &field, std::ostream &os)
{
  const auto header = field_header(field);
  for (std::size_t i = 0; i < header.size(); ++i)
    os << (i ? "," : "") << header[i];
  os << '\n';
  const Grid &grid = field.grid();
  std::vector<double> x(grid.dim());
  for (int k = 0; k < field.slices(); ++k) {
    const std::string t = format_double(field.time_grid().time(k));
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
      grid.node_into(node, x.data());
      os << t;
      for (double xi : x)
        os << ',' << format_double(xi);
      for (int c = 0; c < field.components(); ++c)
        os << ',' << format_double(field(k, node, c));
      os << '\n';
    }
  }
}

void write_field_csv(const GridField &field, const std::string &path)
{
  auto os = open_out(path);
  write_field_csv(field, os);
}

void write_field_metadata(const GridField &field, const std::string &path,
                          const std::string &description)
{
  const Grid &grid = field.grid();
  nlohmann::json j;
  j["description"] = description;
  j["dim"] = grid.dim();
  j["lo"] = std::vector<double>(grid.lo().data(), grid.lo().data() + grid.dim());
  j["hi"] = std::vector<double>(grid.hi().data(), grid.hi().data() + grid.dim());
  j["nodes_per_axis"] = grid.nodes();
  std::vector<double> spacing;
  for (int d = 0; d < grid.dim(); ++d)
    spacing.push_back(grid.spacing(d));
  j["spacing"] = spacing;
  j["t0"] = field.time_grid().t0();
  j["T"] = field.time_grid().t1();
  j["steps"] = field.time_grid().steps();
  j["components"] = field.components();
  j["row_order"] = "time-major, then nodes row-major (first axis slowest)";
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

void write_table_csv(const CsvTable &table, std::ostream &os)
{
  for (std::size_t i = 0; i < table.header.size(); ++i)
    os << (i ? "," : "") << table.header[i];
  os << '\n';
  for (const auto &row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

void write_table_csv(const CsvTable &table, const std::string &path)
{
  auto os = open_out(path);
  write_table_csv(table, os);
}

CsvTable read_table_csv(std::istream &is)
{
  CsvTable table;
  std::string line;
  if (!std::getline(is, line))
    throw InvalidArgument("empty CSV");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      table.header.push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty())
      continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char *end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size())
        throw InvalidArgument("malformed CSV number '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != table.header.size())
      throw InvalidArgument("CSV row width does not match header");
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable read_table_csv(const std::string &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("cannot open '" + path + "'");
  return read_table_csv(is);
}

GridField field_from_table(const CsvTable &table, const Grid &grid, const TimeGrid &time_grid,
                           int components)
{
  GridField field(grid, time_grid, components);
  if (table.header != field_header(field))
    throw InvalidArgument("field CSV header does not match the expected layout");
  const std::size_t expected = static_cast<std::size_t>(field.slices()) * grid.node_count();
  if (table.rows.size() != expected)
    throw InvalidArgument("field CSV has the wrong number of rows");
  std::vector<double> x(grid.dim());
  std::size_t r = 0;
  for (int k = 0; k < field.slices(); ++k) {
    for (std::size_t node = 0; node < grid.node_count(); ++node, ++r) {
      const auto &row = table.rows[r];
      grid.node_into(node, x.data());
      bool ok = row[0] == time_grid.time(k);
      for (int d = 0; d < grid.dim(); ++d)
        ok = ok && row[1 + d] == x[d];
      if (!ok)
        throw InvalidArgument("field CSV coordinates do not match the grid at row " +
                              std::to_string(r + 1));
      for (int c = 0; c < components; ++c)
        field(k, node, c) = row[1 + grid.dim() + c];
    }
  }
  return field;
}

GridField read_field_csv(const std::string &path, const Grid &grid, const TimeGrid &time_grid,
                         int components)
{
  return field_from_table(read_table_csv(path), grid, time_grid, components);
}

} // namespace feedsynth
