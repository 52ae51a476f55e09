#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "embnet/harness.hpp"

namespace embnet {

const char* to_string(Direction dir) {
  return dir == Direction::HostToDevice ? "host->device" : "device->host";
}

VirtualWire::VirtualWire(WireOptions opts) : opts_(opts), rng_(opts.seed) {
  if (opts_.latency_min_ms < 0 || opts_.latency_max_ms < opts_.latency_min_ms) {
    throw std::invalid_argument("wire latency range is empty");
  }
  if (!(opts_.loss >= 0.0 && opts_.loss <= 1.0)) {
    throw std::invalid_argument("wire loss must be within [0, 1]");
  }
}

void VirtualWire::send(Direction dir, Bytes frame, std::int64_t now_us) {
  // Both draws happen for every frame so the loss setting does not shift the
  // latency sequence.
  std::uniform_int_distribution<std::int64_t> latency(opts_.latency_min_ms, opts_.latency_max_ms);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const std::int64_t delay_us = latency(rng_) * kMicrosPerMilli;
  const bool lost = coin(rng_) < opts_.loss;

  capture_.push_back(CapturedFrame{now_us, dir, frame, lost});
  if (lost) return;

  const int q = static_cast<int>(dir);
  const std::int64_t at = std::max(now_us + delay_us, last_at_[q]);
  last_at_[q] = at;
  queues_[q].push_back(InFlight{at, order_++, std::move(frame)});
}

std::optional<std::int64_t> VirtualWire::next_delivery() const {
  std::optional<std::int64_t> best;
  for (const auto& q : queues_) {
    if (!q.empty() && (!best || q.front().at_us < *best)) best = q.front().at_us;
  }
  return best;
}

std::vector<VirtualWire::Delivery> VirtualWire::take_due(std::int64_t now_us) {
  std::vector<InFlight> due[2];
  for (int q = 0; q < 2; ++q) {
    while (!queues_[q].empty() && queues_[q].front().at_us <= now_us) {
      due[q].push_back(std::move(queues_[q].front()));
      queues_[q].pop_front();
    }
  }
  // Merge by (time, send order) so ties resolve the same way every run.
  std::vector<std::pair<InFlight, Direction>> merged;
  for (int q = 0; q < 2; ++q) {
    for (auto& f : due[q]) merged.emplace_back(std::move(f), static_cast<Direction>(q));
  }
  std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
    return a.first.at_us != b.first.at_us ? a.first.at_us < b.first.at_us
                                          : a.first.order < b.first.order;
  });
  std::vector<Delivery> out;
  out.reserve(merged.size());
  for (auto& [f, dir] : merged) out.push_back(Delivery{dir, std::move(f.frame)});
  return out;
}

// ---------------------------------------------------------------------------
// pcap

namespace {

void put_le32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_le16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

Bytes encode_pcap(const std::vector<CapturedFrame>& frames) {
  Bytes out;
  put_le32(out, 0xa1b2c3d4);
  put_le16(out, 2);
  put_le16(out, 4);
  put_le32(out, 0);      // thiszone
  put_le32(out, 0);      // sigfigs
  put_le32(out, 65535);  // snaplen
  put_le32(out, 1);      // LINKTYPE_ETHERNET
  for (const auto& f : frames) {
    put_le32(out, static_cast<std::uint32_t>(f.t_us / 1'000'000));
    put_le32(out, static_cast<std::uint32_t>(f.t_us % 1'000'000));
    put_le32(out, static_cast<std::uint32_t>(f.frame.size()));
    put_le32(out, static_cast<std::uint32_t>(f.frame.size()));
    out.insert(out.end(), f.frame.begin(), f.frame.end());
  }
  return out;
}

void write_pcap(const std::string& path, const std::vector<CapturedFrame>& frames) {
  const Bytes data = encode_pcap(frames);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace embnet
