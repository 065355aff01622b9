#pragma once

// Reference implementations written independently of the library, used to
// cross-check it on generated inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace serpmine::oracle {

// Positional field match over the shorter list, divided by the mean length.
inline double url_similarity(const std::vector<std::string>& h, const std::vector<std::string>& s) {
    std::size_t shorter = h.size() < s.size() ? h.size() : s.size();
    long matches = 0;
    for (std::size_t i = 0; i < shorter; ++i)
        if (h[i].compare(s[i]) == 0) matches += 1;
    double mean_length = (static_cast<double>(h.size()) + static_cast<double>(s.size())) / 2.0;
    return static_cast<double>(matches) / mean_length;
}

// Cosine over dense vectors indexed by the sorted token union.
inline double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    std::set<std::string> keys;
    for (const auto& [k, v] : a) keys.insert(k);
    for (const auto& [k, v] : b) keys.insert(k);
    std::vector<double> x, y;
    for (const auto& k : keys) {
        auto ia = a.find(k);
        auto ib = b.find(k);
        x.push_back(ia == a.end() ? 0.0 : ia->second);
        y.push_back(ib == b.end() ? 0.0 : ib->second);
    }
    double dot = 0, xx = 0, yy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    if (xx == 0 && yy == 0) return 1.0;
    if (xx == 0 || yy == 0) return 0.0;
    return dot / (std::sqrt(xx) * std::sqrt(yy));
}

// Random field list over a small alphabet so positional matches are common.
inline std::vector<std::string> random_fields(std::mt19937_64& rng, std::size_t max_length = 8) {
    static const char* alphabet[] = {"https", "http", "a.example", "b.example", "tpg", "x", "y", "q=1", "q=2"};
    std::size_t n = 1 + rng() % max_length;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(alphabet[rng() % std::size(alphabet)]);
    return out;
}

inline std::map<std::string, double> random_vector(std::mt19937_64& rng, std::size_t max_terms = 12) {
    static const char* terms[] = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m", "n"};
    std::map<std::string, double> v;
    std::size_t n = rng() % (max_terms + 1);
    for (std::size_t i = 0; i < n; ++i) {
        double w = static_cast<double>(rng() % 1000) / 10.0;
        if (w > 0) v[terms[rng() % std::size(terms)]] += w;
    }
    return v;
}

} // namespace serpmine::oracle
