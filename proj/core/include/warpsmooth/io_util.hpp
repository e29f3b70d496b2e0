#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace warpsmooth::io {

// %.17g: shortest text that round-trips any double exactly.
std::string format_double(double v);

// Streaming JSON writer with caller-controlled key order and %.17g floats,
// so identical inputs serialize to identical bytes.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view k);
  JsonWriter& value(double v);
  JsonWriter& value(int v);
  JsonWriter& value(long long v);
  JsonWriter& value(bool v);
  JsonWriter& value(std::string_view v);
  JsonWriter& null();

  const std::string& str() const { return out_; }

 private:
  void element_prefix();
  void append_escaped(std::string_view s);

  std::string out_;
  std::vector<int> counts_;
  bool pending_key_ = false;
};

// RFC-4180 CSV: CRLF rows, quoted fields when needed, 17-significant-digit
// floats, header row first.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  void row_values(const std::vector<double>& values);
  const std::string& str() const { return out_; }

 private:
  void append_row(const std::vector<std::string>& fields);
  std::string out_;
  size_t width_ = 0;
};

uint64_t fnv1a64(std::string_view data);
std::string hex16(uint64_t v);

void write_file(const std::string& path, std::string_view data);
std::string read_file(const std::string& path);

void write_binary_doubles(const std::string& path, const std::vector<double>& values);
std::vector<double> read_binary_doubles(const std::string& path);

}  // namespace warpsmooth::io
