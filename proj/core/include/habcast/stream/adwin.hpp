#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "habcast/hash.hpp"

namespace habcast {

/// Adaptive windowing drift detector over an exponential histogram. Level l
/// holds buckets summarizing 2^l consecutive values; at most `max_buckets`
/// buckets per level, oldest first.
class Adwin {
  public:
    struct Bucket {
        double count = 0.0;
        double sum = 0.0;
        double m2 = 0.0; ///< sum of squared deviations from the bucket mean
    };

    explicit Adwin(double delta = 0.002, std::size_t max_buckets = 5, std::size_t min_window = 5);

    /// Inserts one value; returns true when the window was cut.
    bool update(double value);

    [[nodiscard]] double width() const { return total_.count; }
    [[nodiscard]] double mean() const { return total_.count > 0.0 ? total_.sum / total_.count : 0.0; }
    /// Population variance of the retained window.
    [[nodiscard]] double variance() const { return total_.count > 0.0 ? total_.m2 / total_.count : 0.0; }
    [[nodiscard]] double delta() const { return delta_; }
    [[nodiscard]] std::size_t detections() const { return detections_; }
    [[nodiscard]] const std::vector<std::deque<Bucket>>& levels() const { return levels_; }

    /// Cut threshold for sub-windows of n0 (older) and n1 (newer) values.
    [[nodiscard]] double cut_threshold(double n0, double n1) const;
    /// Confidence radius of the current window mean, same bound family as the cut test.
    [[nodiscard]] double confidence_radius() const;

    void hash_into(Fnv1a& h) const;

  private:
    static Bucket merge(const Bucket& a, const Bucket& b);
    void compress();
    bool detect_once();
    void drop_oldest();

    double delta_;
    std::size_t max_buckets_;
    std::size_t min_window_;
    std::vector<std::deque<Bucket>> levels_;
    Bucket total_;
    std::size_t detections_ = 0;
};

} // namespace habcast
