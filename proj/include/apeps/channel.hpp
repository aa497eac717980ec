#pragma once

// Channel condition estimation: SINR of a link, SINR to packet reception
// rate, Bernoulli delivery sampling and good/bad channel grouping.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "apeps/core.hpp"

namespace apeps {

using Rng = std::mt19937_64;

/// Independent generator for one (seed, stream) pair.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform in [0, 1) from the top 53 bits of one draw.
double uniform01(Rng& rng);

struct LinkSample {
    NodeId sender;
    NodeId receiver;
    double received_power_mw = 0.0;
    double noise_mw = 1.0;
    std::vector<double> interference_mw;

    double sinr() const;
};

/// Received power over noise plus the sum of interferers. Throws
/// std::domain_error when noise is not positive or a power is negative.
double compute_sinr(double received_power_mw, double noise_mw,
                    std::span<const double> interference_mw = {});

double to_db(double ratio);
double from_db(double db);

struct PrrModel {
    PrrMode mode = PrrMode::FixedErrorRate;
    double fixed_error_rate = 0.0;
    double decode_threshold_db = 5.0;
    double logistic_midpoint_db = 5.0;
    double logistic_slope = 1.0;

    static PrrModel from_config(const SimConfig& cfg);
};

/// Packet reception rate for a link at the given SINR (dB).
double prr(const PrrModel& model, double sinr_db);

/// True with probability prr_value. Throws std::domain_error outside [0, 1].
bool sample_delivery(double prr_value, Rng& rng);

enum class GroupTag : std::uint8_t { Group1, Group2 };

/// Group1 is the good-channel group: sinr_db >= threshold.
GroupTag classify_group(double sinr_db, double sinr_threshold_db);

/// P_tx * (d0 / d)^alpha, with d clamped to at least d0.
double received_power_mw(double tx_power_mw, double distance_m, double reference_distance_m,
                         double path_loss_exponent);

/// Externally supplied per-node SINR samples, `frame_index node_id sinr_db` per line.
class ChannelTrace {
public:
    static ChannelTrace parse(std::string_view text);

    /// Most recent sample for the node at or before `frame`.
    std::optional<double> sinr_db(NodeId node, FrameIndex frame) const;
    bool empty() const { return samples_.empty(); }

private:
    std::map<std::uint32_t, std::vector<std::pair<FrameIndex, double>>> samples_;
};

}  // namespace apeps
