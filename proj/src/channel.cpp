#include "apeps/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace apeps {

Rng make_rng(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double LinkSample::sinr() const
{
    return compute_sinr(received_power_mw, noise_mw, interference_mw);
}

double compute_sinr(double received_power_mw, double noise_mw,
                    std::span<const double> interference_mw)
{
    if (!(noise_mw > 0.0))
        throw std::domain_error("compute_sinr: noise power must be positive");
    if (received_power_mw < 0.0)
        throw std::domain_error("compute_sinr: received power must be non-negative");
    double denom = noise_mw;
    for (double p : interference_mw) {
        if (p < 0.0)
            throw std::domain_error("compute_sinr: interference power must be non-negative");
        denom += p;
    }
    return received_power_mw / denom;
}

double to_db(double ratio)
{
    if (ratio <= 0.0)
        return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(ratio);
}

double from_db(double db)
{
    return std::pow(10.0, db / 10.0);
}

PrrModel PrrModel::from_config(const SimConfig& cfg)
{
    return {cfg.prr_mode, cfg.error_rate, cfg.decode_threshold_db, cfg.logistic_midpoint_db,
            cfg.logistic_slope};
}

double prr(const PrrModel& model, double sinr_db)
{
    switch (model.mode) {
    case PrrMode::FixedErrorRate:
        return std::clamp(1.0 - model.fixed_error_rate, 0.0, 1.0);
    case PrrMode::SinrStep:
        return sinr_db >= model.decode_threshold_db ? 1.0 : 0.0;
    case PrrMode::SinrLogistic: {
        if (std::isnan(sinr_db))
            return 0.0;
        const double x = -model.logistic_slope * (sinr_db - model.logistic_midpoint_db);
        return 1.0 / (1.0 + std::exp(x));
    }
    }
    return 0.0;
}

bool sample_delivery(double prr_value, Rng& rng)
{
    if (!(prr_value >= 0.0 && prr_value <= 1.0))
        throw std::domain_error("sample_delivery: prr must lie in [0, 1]");
    return uniform01(rng) < prr_value;
}

GroupTag classify_group(double sinr_db, double sinr_threshold_db)
{
    return sinr_db >= sinr_threshold_db ? GroupTag::Group1 : GroupTag::Group2;
}

double received_power_mw(double tx_power_mw, double distance_m, double reference_distance_m,
                         double path_loss_exponent)
{
    const double d = std::max(distance_m, reference_distance_m);
    return tx_power_mw * std::pow(reference_distance_m / d, path_loss_exponent);
}

ChannelTrace ChannelTrace::parse(std::string_view text)
{
    ChannelTrace trace;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        long long frame = 0;
        long long node = 0;
        double sinr = 0;
        if (!(ls >> frame)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            throw std::invalid_argument("channel trace line " + std::to_string(line_no) +
                                        ": expected 'frame_index node_id sinr_db'");
        }
        std::string rest;
        if (!(ls >> node >> sinr) || (ls >> rest) || frame < 0 || node < 0)
            throw std::invalid_argument("channel trace line " + std::to_string(line_no) +
                                        ": expected 'frame_index node_id sinr_db'");
        auto& series = trace.samples_[static_cast<std::uint32_t>(node)];
        if (!series.empty() && series.back().first >= frame)
            throw std::invalid_argument("channel trace line " + std::to_string(line_no) +
                                        ": frame indices must increase per node");
        series.emplace_back(frame, sinr);
    }
    return trace;
}

std::optional<double> ChannelTrace::sinr_db(NodeId node, FrameIndex frame) const
{
    const auto it = samples_.find(node.value());
    if (it == samples_.end())
        return std::nullopt;
    const auto& s = it->second;
    auto pos = std::upper_bound(s.begin(), s.end(), frame,
                                [](FrameIndex f, const auto& e) { return f < e.first; });
    if (pos == s.begin())
        return std::nullopt;
    return std::prev(pos)->second;
}

}  // namespace apeps
