#include "warpsmooth/io_util.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "warpsmooth/errors.hpp"

namespace warpsmooth::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void JsonWriter::element_prefix() {
  if (pending_key_) {
    pending_key_ = false;
    return;
  }
  if (!counts_.empty()) {
    if (counts_.back() > 0) out_ += ',';
    ++counts_.back();
  }
}

void JsonWriter::append_escaped(std::string_view s) {
  out_ += '"';
  for (char c : s) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\r': out_ += "\\r"; break;
      case '\t': out_ += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out_ += buf;
        } else {
          out_ += c;
        }
    }
  }
  out_ += '"';
}

JsonWriter& JsonWriter::begin_object() {
  element_prefix();
  out_ += '{';
  counts_.push_back(0);
  return *this;
}
JsonWriter& JsonWriter::end_object() {
  counts_.pop_back();
  out_ += '}';
  return *this;
}
JsonWriter& JsonWriter::begin_array() {
  element_prefix();
  out_ += '[';
  counts_.push_back(0);
  return *this;
}
JsonWriter& JsonWriter::end_array() {
  counts_.pop_back();
  out_ += ']';
  return *this;
}
JsonWriter& JsonWriter::key(std::string_view k) {
  if (counts_.back() > 0) out_ += ',';
  ++counts_.back();
  append_escaped(k);
  out_ += ':';
  pending_key_ = true;
  return *this;
}
JsonWriter& JsonWriter::value(double v) {
  element_prefix();
  out_ += format_double(v);
  return *this;
}
JsonWriter& JsonWriter::value(int v) { return value(static_cast<long long>(v)); }
JsonWriter& JsonWriter::value(long long v) {
  element_prefix();
  out_ += std::to_string(v);
  return *this;
}
JsonWriter& JsonWriter::value(bool v) {
  element_prefix();
  out_ += v ? "true" : "false";
  return *this;
}
JsonWriter& JsonWriter::value(std::string_view v) {
  element_prefix();
  append_escaped(v);
  return *this;
}
JsonWriter& JsonWriter::null() {
  element_prefix();
  out_ += "null";
  return *this;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
  append_row(header);
}

namespace {
bool needs_quote(const std::string& f) {
  return f.find_first_of(",\"\r\n") != std::string::npos;
}
}  // namespace

void CsvWriter::append_row(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    if (needs_quote(fields[i])) {
      out_ += '"';
      for (char c : fields[i]) {
        out_ += c;
        if (c == '"') out_ += '"';
      }
      out_ += '"';
    } else {
      out_ += fields[i];
    }
  }
  out_ += "\r\n";
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw IoError("CsvWriter: ragged row");
  append_row(fields);
}

void CsvWriter::row_values(const std::vector<double>& values) {
  std::vector<std::string> fields;
  fields.reserve(values.size());
  for (double v : values) fields.push_back(format_double(v));
  row(fields);
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("short write: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for read: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

// Layout: 8-byte little-endian count, then count float64 values.
void write_binary_doubles(const std::string& path, const std::vector<double>& values) {
  std::string buf;
  uint64_t count = values.size();
  buf.append(reinterpret_cast<const char*>(&count), 8);
  buf.append(reinterpret_cast<const char*>(values.data()), values.size() * 8);
  write_file(path, buf);
}

std::vector<double> read_binary_doubles(const std::string& path) {
  std::string data = read_file(path);
  if (data.size() < 8) throw IoError("binary array too short: " + path);
  uint64_t count = 0;
  std::memcpy(&count, data.data(), 8);
  if (data.size() != 8 + count * 8) throw IoError("binary array size mismatch: " + path);
  std::vector<double> values(count);
  std::memcpy(values.data(), data.data() + 8, count * 8);
  return values;
}

}  // namespace warpsmooth::io
