#include "bruv/annotation_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <map>
#include <tuple>
#include <nlohmann/json.hpp>

#include "bruv/errors.hpp"

namespace bruv {

namespace {

using nlohmann::json;

json to_json(const AnnotationStore::Record& r) {
  json j = {{"seq", r.seq},
            {"timestamp_ms", r.timestamp_ms},
            {"video_id", r.annotation.video_id},
            {"track_id", r.annotation.track_id},
            {"verdict", r.annotation.verdict == Verdict::labeled ? "labeled" : "rejected"}};
  if (r.annotation.species) j["species"] = r.annotation.species->name();
  return j;
}

AnnotationStore::Record from_json(const json& j) {
  AnnotationStore::Record r;
  r.seq = j.at("seq").get<std::int64_t>();
  r.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  const auto verdict = j.at("verdict").get<std::string>();
  auto video = j.at("video_id").get<std::string>();
  const auto track = j.at("track_id").get<std::int64_t>();
  if (verdict == "labeled") {
    r.annotation = Annotation::labeled(std::move(video), track,
                                       SpeciesLabel(j.at("species").get<std::string>()));
  } else if (verdict == "rejected") {
    r.annotation = Annotation::rejected(std::move(video), track);
  } else {
    throw ParseError("unknown verdict '" + verdict + "'");
  }
  return r;
}

void append_durably(const std::filesystem::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open annotation log: " + std::string(std::strerror(errno)));
  std::size_t done = 0;
  while (done < line.size()) {
    const auto n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      ::close(fd);
      throw Error("annotation log write failed: " + why);
    }
    done += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error("annotation log fsync failed");
}

}  // namespace

AnnotationStore::AnnotationStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records_.push_back(from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("annotation log: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(std::string("annotation log: ") + e.what(), line_no);
    }
    next_seq_ = std::max(next_seq_, records_.back().seq + 1);
  }
}

AnnotationStore::Record AnnotationStore::append(const Annotation& annotation,
                                                std::optional<std::int64_t> timestamp_ms) {
  if ((annotation.verdict == Verdict::labeled) != annotation.species.has_value()) {
    throw ValidationError("a species is required exactly when the verdict is 'labeled'");
  }
  std::unique_lock lock(mutex_);
  Record r;
  r.seq = next_seq_;
  r.timestamp_ms = timestamp_ms.value_or(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  r.annotation = annotation;
  append_durably(path_, to_json(r).dump() + "\n");
  ++next_seq_;
  records_.push_back(r);
  return r;
}

std::vector<AnnotationStore::Record> AnnotationStore::records() const {
  std::shared_lock lock(mutex_);
  return records_;
}

std::vector<Annotation> AnnotationStore::latest() const {
  std::vector<Record> ordered = records();
  std::stable_sort(ordered.begin(), ordered.end(), [](const Record& a, const Record& b) {
    return std::tie(a.timestamp_ms, a.seq) < std::tie(b.timestamp_ms, b.seq);
  });
  std::map<std::pair<std::string, std::int64_t>, Annotation> view;
  for (auto& r : ordered) {
    view.insert_or_assign({r.annotation.video_id, r.annotation.track_id}, r.annotation);
  }
  std::vector<Annotation> out;
  out.reserve(view.size());
  for (auto& [key, a] : view) out.push_back(std::move(a));
  return out;
}

std::optional<Annotation> AnnotationStore::latest_for(const std::string& video_id,
                                                      std::int64_t track_id) const {
  std::optional<Annotation> out;
  std::optional<std::pair<std::int64_t, std::int64_t>> order;
  std::shared_lock lock(mutex_);
  for (const auto& r : records_) {
    if (r.annotation.video_id != video_id || r.annotation.track_id != track_id) continue;
    const auto key = std::make_pair(r.timestamp_ms, r.seq);
    if (!order || key > *order) {
      order = key;
      out = r.annotation;
    }
  }
  return out;
}

}  // namespace bruv
