#include "staged_sum.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ergo::detail {
namespace {

enum class Role { IntroDie, Intro, Die, Mid };

void advance(const Mat& M, Vec& w, long long steps) {
  for (long long s = 0; s < steps; ++s) w = M * w;
}

// n-indices (0-based) sorted by exponent; ties keep ascending n so the
// reduction order is fixed.
std::vector<int> order_by_exponent(const std::vector<long long>& exps, bool descending) {
  std::vector<int> ord(exps.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) {
    if (exps[a] != exps[b]) return descending ? exps[a] > exps[b] : exps[a] < exps[b];
    return a < b;
  });
  return ord;
}

}  // namespace

Vec staged_sum(const std::vector<Stage>& stages, const Vec& init, long long N,
               bool parallel, StagedStats* stats) {
  const int m = static_cast<int>(stages.size());
  if (N < 1) throw std::invalid_argument("staged_sum needs N >= 1");

  int max_var = 0;
  for (const Stage& sg : stages) max_var = std::max(max_var, sg.var);
  std::vector<int> first(max_var + 1, 0), last(max_var + 1, 0);
  for (int j = 1; j <= m; ++j) {
    const Stage& sg = stages[j - 1];
    if (sg.var < 1) throw std::invalid_argument("staged_sum stage without a variable");
    const std::size_t n = static_cast<std::size_t>(N);
    const bool sized = (sg.kind == Stage::Kind::Operator && sg.pow && sg.exps.size() == n) ||
                       (sg.kind == Stage::Kind::Scalar && sg.coeffs.size() == n) ||
                       (sg.kind == Stage::Kind::Seed && sg.seeds && sg.seeds->size() == n);
    if (!sized) throw std::invalid_argument("staged_sum stage data does not match N");
    if (first[sg.var] == 0) first[sg.var] = j;
    last[sg.var] = j;
  }

  std::vector<int> key;  // live variables, ascending
  std::vector<Vec> table{init};
  StagedStats st{1, 0};

  for (int j = 1; j <= m; ++j) {
    const Stage& sg = stages[j - 1];
    const int v = sg.var;
    const auto key_pos = std::lower_bound(key.begin(), key.end(), v);
    const bool keyed = key_pos != key.end() && *key_pos == v;
    const Role role = keyed ? (last[v] == j ? Role::Die : Role::Mid)
                            : (last[v] == j ? Role::IntroDie : Role::Intro);
    const int pos = static_cast<int>(key_pos - key.begin());
    long long stride = 1;
    for (int t = 0; t < pos; ++t) stride *= N;
    const long long slots = static_cast<long long>(table.size());
    const bool use_par = parallel && slots > 1;

    switch (sg.kind) {
      case Stage::Kind::Operator: {
        const Mat& M = sg.pow->entries();
        const Mat* post = sg.post ? &sg.post->entries() : nullptr;
        if (role == Role::IntroDie) {
          const std::vector<int> ord = order_by_exponent(sg.exps, false);
          const long long emax = sg.exps[ord.back()];
#pragma omp parallel for if (use_par)
          for (long long s = 0; s < slots; ++s) {
            Vec w = table[s];
            Vec acc = Vec::Zero(w.size());
            long long p = 0;
            std::size_t i = 0;
            while (i < ord.size()) {
              const long long e = sg.exps[ord[i]];
              std::size_t cnt = 1;
              while (i + cnt < ord.size() && sg.exps[ord[i + cnt]] == e) ++cnt;
              advance(M, w, e - p);
              p = e;
              if (cnt == 1)
                acc += w;
              else
                acc += static_cast<double>(cnt) * w;
              i += cnt;
            }
            acc /= static_cast<double>(N);
            if (post) acc = *post * acc;
            table[s] = acc;
          }
          st.applications += static_cast<std::size_t>(slots) *
                             static_cast<std::size_t>(emax + (post ? 1 : 0));
        } else if (role == Role::Intro) {
          const std::vector<int> ord = order_by_exponent(sg.exps, false);
          const long long emax = sg.exps[ord.back()];
          std::vector<Vec> nt(static_cast<std::size_t>(slots) * static_cast<std::size_t>(N));
#pragma omp parallel for if (use_par)
          for (long long s = 0; s < slots; ++s) {
            const long long low = s % stride, high = s / stride;
            const long long base = low + high * stride * N;
            Vec w = table[s];
            long long p = 0;
            for (int i : ord) {
              advance(M, w, sg.exps[i] - p);
              p = sg.exps[i];
              nt[base + static_cast<long long>(i) * stride] = post ? Vec(*post * w) : w;
            }
          }
          table = std::move(nt);
          key.insert(key.begin() + pos, v);
          st.applications += static_cast<std::size_t>(slots) *
                             static_cast<std::size_t>(emax + (post ? N : 0));
        } else if (role == Role::Die) {
          const std::vector<int> ord = order_by_exponent(sg.exps, true);
          const long long emax = sg.exps[ord.front()];
          const long long out_slots = slots / N;
          std::vector<Vec> nt(static_cast<std::size_t>(out_slots));
#pragma omp parallel for if (parallel && out_slots > 1)
          for (long long t = 0; t < out_slots; ++t) {
            const long long low = t % stride, high = t / stride;
            Vec acc = Vec::Zero(table[0].size());
            long long p = emax;
            for (int i : ord) {
              advance(M, acc, p - sg.exps[i]);
              p = sg.exps[i];
              acc += table[low + static_cast<long long>(i) * stride + high * stride * N];
            }
            advance(M, acc, p);
            acc /= static_cast<double>(N);
            if (post) acc = *post * acc;
            nt[t] = acc;
          }
          table = std::move(nt);
          key.erase(key.begin() + pos);
          st.applications += static_cast<std::size_t>(out_slots) *
                             static_cast<std::size_t>(emax + (post ? 1 : 0));
        } else {
          long long exp_sum = 0;
          for (long long e : sg.exps) exp_sum += e;
#pragma omp parallel for if (use_par)
          for (long long s = 0; s < slots; ++s) {
            const int n0 = static_cast<int>((s / stride) % N);
            Vec w = table[s];
            advance(M, w, sg.exps[n0]);
            if (post) w = *post * w;
            table[s] = w;
          }
          st.applications += static_cast<std::size_t>(slots / N) *
                             static_cast<std::size_t>(exp_sum) +
                             static_cast<std::size_t>(slots) * (post ? 1 : 0);
        }
        break;
      }

      case Stage::Kind::Scalar: {
        if (role == Role::IntroDie) {
          Complex mean = 0.0;
          for (const Complex& c : sg.coeffs) mean += c;
          mean /= static_cast<double>(N);
#pragma omp parallel for if (use_par)
          for (long long s = 0; s < slots; ++s) table[s] *= mean;
        } else if (role == Role::Intro) {
          std::vector<Vec> nt(static_cast<std::size_t>(slots) * static_cast<std::size_t>(N));
#pragma omp parallel for if (use_par)
          for (long long s = 0; s < slots; ++s) {
            const long long low = s % stride, high = s / stride;
            const long long base = low + high * stride * N;
            for (long long i = 0; i < N; ++i) nt[base + i * stride] = sg.coeffs[i] * table[s];
          }
          table = std::move(nt);
          key.insert(key.begin() + pos, v);
        } else if (role == Role::Die) {
          const long long out_slots = slots / N;
          std::vector<Vec> nt(static_cast<std::size_t>(out_slots));
#pragma omp parallel for if (parallel && out_slots > 1)
          for (long long t = 0; t < out_slots; ++t) {
            const long long low = t % stride, high = t / stride;
            Vec acc = Vec::Zero(table[0].size());
            for (long long i = 0; i < N; ++i)
              acc += sg.coeffs[i] * table[low + i * stride + high * stride * N];
            nt[t] = acc / static_cast<double>(N);
          }
          table = std::move(nt);
          key.erase(key.begin() + pos);
        } else {
#pragma omp parallel for if (use_par)
          for (long long s = 0; s < slots; ++s) table[s] *= sg.coeffs[(s / stride) % N];
        }
        break;
      }

      case Stage::Kind::Seed: {
        if (table[0].size() != 1)
          throw std::invalid_argument("staged_sum seed stage needs a scalar table");
        const std::vector<Vec>& seeds = *sg.seeds;
        if (role == Role::IntroDie) {
          Vec mean = Vec::Zero(seeds[0].size());
          for (const Vec& s : seeds) mean += s;
          mean /= static_cast<double>(N);
#pragma omp parallel for if (use_par)
          for (long long s = 0; s < slots; ++s) table[s] = table[s](0) * mean;
        } else if (role == Role::Intro) {
          std::vector<Vec> nt(static_cast<std::size_t>(slots) * static_cast<std::size_t>(N));
#pragma omp parallel for if (use_par)
          for (long long s = 0; s < slots; ++s) {
            const long long low = s % stride, high = s / stride;
            const long long base = low + high * stride * N;
            for (long long i = 0; i < N; ++i) nt[base + i * stride] = table[s](0) * seeds[i];
          }
          table = std::move(nt);
          key.insert(key.begin() + pos, v);
        } else if (role == Role::Die) {
          const long long out_slots = slots / N;
          std::vector<Vec> nt(static_cast<std::size_t>(out_slots));
#pragma omp parallel for if (parallel && out_slots > 1)
          for (long long t = 0; t < out_slots; ++t) {
            const long long low = t % stride, high = t / stride;
            Vec acc = Vec::Zero(seeds[0].size());
            for (long long i = 0; i < N; ++i)
              acc += table[low + i * stride + high * stride * N](0) * seeds[i];
            nt[t] = acc / static_cast<double>(N);
          }
          table = std::move(nt);
          key.erase(key.begin() + pos);
        } else {
#pragma omp parallel for if (use_par)
          for (long long s = 0; s < slots; ++s)
            table[s] = Vec(table[s](0) * seeds[(s / stride) % N]);
        }
        break;
      }
    }

    st.peak_slots = std::max(st.peak_slots, table.size());
  }

  if (!key.empty() || table.size() != 1)
    throw std::logic_error("staged_sum left live variables behind");
  if (stats) *stats = st;
  return table[0];
}

}  // namespace ergo::detail
