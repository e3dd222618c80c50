#include "athena/io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "athena/errors.hpp"

namespace athena {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::Io, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

template <typename Fn>
auto with_file_context(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.what(), e.location());
  }
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_binary_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

SignatureSet load_signatures(const fs::path& dir) {
  std::vector<Signature> sigs;
  for (const auto& path : files_with_extension(dir, ".sig")) {
    sigs.push_back(with_file_context(path, [&] { return parse_signature(read_text_file(path)); }));
  }
  if (sigs.empty()) throw Error(ErrorCode::Io, "no .sig files in " + dir.string());
  return SignatureSet(std::move(sigs));
}

std::vector<LabeledCapture> load_captures(const fs::path& dir, const BackgroundRuleSet& rules) {
  std::vector<LabeledCapture> out;
  for (const auto& path : files_with_extension(dir, ".log")) {
    const std::string stem = path.stem().string();  // <activity>.<seq>
    const auto dot = stem.find('.');
    if (dot == 0 || dot == std::string::npos) continue;
    TrafficLog log = with_file_context(path, [&] { return parse_log(read_text_file(path)); });
    LabeledCapture c;
    c.activity_name = stem.substr(0, dot);
    c.device_label = log.empty() ? std::string() : log[0].base.device_addr;
    c.foreground = filter_background(log, rules).foreground;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace athena
