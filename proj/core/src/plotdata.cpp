#include <filesystem>
#include <fstream>
#include <sstream>

#include "polyopt/errors.hpp"
#include "polyopt/experiment.hpp"

namespace polyopt {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(field);
  return fields;
}

struct Series {
  std::vector<double> x;
  std::vector<double> value;
};

Series read_metric(const std::string& path, const std::string& x_column,
                   const std::string& metric) {
  std::ifstream in(path);
  if (!in) throw IoError("plotdata: cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line != kMetricsSchema) {
    throw ConfigError("plotdata: '" + path + "' does not carry the metrics schema");
  }
  std::getline(in, line);
  const std::vector<std::string> header = split_csv_line(line);
  int x_index = -1, metric_index = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == x_column) x_index = static_cast<int>(i);
    if (header[i] == metric) metric_index = static_cast<int>(i);
  }
  if (x_index < 0 || metric_index < 0) {
    throw ConfigError("plotdata: '" + path + "' lacks column '" +
                      (x_index < 0 ? x_column : metric) + "'");
  }

  Series series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ConfigError("plotdata: ragged row in '" + path + "'");
    }
    series.x.push_back(std::stod(fields[x_index]));
    series.value.push_back(std::stod(fields[metric_index]));
  }
  return series;
}

}  // namespace

int emit_plot_data(const PlotSpec& spec, const RunOptions& options) {
  namespace fs = std::filesystem;
  fs::path out(spec.out);
  if (!options.out_root.empty() && out.is_relative()) {
    out = fs::path(options.out_root) / out;
  }
  if (out.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
  }
  std::ofstream csv(out, std::ios::trunc);
  if (!csv) throw IoError("plotdata: cannot open '" + out.string() + "' for writing");
  csv << kPlotSchema << "\nmethod,x,value\n";

  for (const PlotInput& input : spec.inputs) {
    Series series = read_metric(input.path, spec.x, spec.metric);
    if (spec.negate) {
      for (double& v : series.value) v = -v;
    }
    if (spec.moving_average > 1) {
      const int w = spec.moving_average;
      if (static_cast<std::size_t>(w) > series.value.size()) {
        throw ConfigError("plotdata: moving_average window exceeds series length for '" +
                          input.path + "'");
      }
      std::vector<double> smoothed(series.value.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < series.value.size(); ++i) {
        acc += series.value[i];
        if (i >= static_cast<std::size_t>(w)) acc -= series.value[i - w];
        const double count = std::min<std::size_t>(i + 1, w);
        smoothed[i] = acc / static_cast<double>(count);
      }
      series.value = std::move(smoothed);
    }
    for (std::size_t i = 0; i < series.value.size(); ++i) {
      csv << input.method << ',' << format_double(series.x[i]) << ','
          << format_double(series.value[i]) << '\n';
    }
  }
  return 0;
}

}  // namespace polyopt
