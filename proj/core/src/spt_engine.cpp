#include "spt_engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "detail.hpp"
#include "stratexact/enumeration.hpp"
#include "stratexact/errors.hpp"

namespace stratexact::detail {
namespace {

constexpr int kWaveWidth = 32;
constexpr std::int64_t kMinWorkItems = 64;
constexpr int kScanBlock = 64;

// One enumeration unit of a stratum: a full stratum table, or for a balanced
// stratum a (v11, v00) class whose effect ranges over [dlo, dhi] in steps of 2.
struct Item {
  StratumPotential table;  // class items carry (u11, 0, 0, u00)
  bool cls = false;
  int dlo = 0;
  int dhi = 0;
  int base1 = 0;  // fixed part of v1.
  int base2 = 0;  // fixed part of v.1
  int free = 0;   // n - u11 - u00 for class items
  int dfix = 0;   // effect of a full table
};

std::vector<Item> stratum_items(const OutcomeTable& obs, int k, bool cls) {
  std::vector<Item> items;
  const auto& s = obs[k];
  const int n = s.total();
  if (cls) {
    for (int u11 = 0; u11 <= n; ++u11) {
      for (int u00 = 0; u00 <= n - u11; ++u00) {
        const auto range = effect_bounds(s, u11, u00);
        if (!range) continue;
        Item it;
        it.table = {u11, 0, 0, u00};
        it.cls = true;
        it.dlo = range->lo;
        it.dhi = range->hi;
        it.base1 = u11;
        it.base2 = u11;
        it.free = n - u11 - u00;
        items.push_back(it);
      }
    }
    return items;
  }
  for (const auto& v : enumerate_stratum_tables(obs, k)) {
    Item it;
    it.table = v;
    it.dlo = it.dhi = it.dfix = v.effect();
    it.base1 = v.treated_ones();
    it.base2 = v.control_ones();
    items.push_back(it);
  }
  return items;
}

Ratio normalized(std::int64_t num, std::int64_t den) {
  if (den == 0) return num == 0 ? Ratio{0, 0} : Ratio{1, 0};
  if (num == 0) return {0, 1};
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

// a/b < c/d with x/0 = +inf and 0/0 sorted last.
bool ratio_less(const Ratio& a, const Ratio& b) {
  const bool a_undef = a.num == 0 && a.den == 0;
  const bool b_undef = b.num == 0 && b.den == 0;
  if (a_undef || b_undef) return !a_undef && b_undef;
  return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

template <typename T>
struct Block {
  int stratum = 0;
  std::vector<Item> items;
  bool materialized = true;
  std::vector<T> e;  // items x R
  std::vector<T> emin;
  std::vector<T> emax;
  std::vector<T> top;       // items x L, |e| descending
  std::vector<double> var;  // items x R, studentized only
};

struct Work {
  std::int64_t prefix = 0;
  int begin = 0;
  int end = 0;
};

struct Acceptance {
  std::int64_t d = 0;
  int item = 0;
};

struct LocalResult {
  std::int64_t tested = 0;
  std::vector<Acceptance> new_d;
  std::vector<Ratio> new_rr;
};

struct Witness {
  std::int64_t prefix = 0;
  int item = 0;
};

template <typename T>
class Engine {
 public:
  Engine(const OutcomeTable& obs, const AllocationSet& alloc, const EngineOptions& options,
         bool reduced)
      : obs_(obs),
        alloc_(alloc),
        opt_(options),
        reduced_(reduced),
        scale_(obs.design()),
        K_(obs.strata()),
        n_(obs.design().n()),
        R_(alloc.replicates()) {
    D_ = scale_.D();
    q_obs_ = scale_.observed(obs);
    if (opt_.stat == StatisticKind::Sterne) {
      need_ = sterne_count(opt_.alpha, R_);
    } else {
      need_ = acceptance_count(opt_.alpha, R_, alloc.exhaustive());
    }
    L_ = static_cast<int>(std::min<std::int64_t>(need_, R_));
    if (opt_.stat == StatisticKind::Studentized) v_obs_ = estimated_variance(obs);
    build_blocks();
  }

  EngineResult run() {
    const std::vector<Work> works = plan();
    std::vector<char> bits(2 * static_cast<std::size_t>(n_) + 1, 0);
    std::set<Ratio> rr_set;
    std::vector<std::optional<Witness>> witness(bits.size());
    EngineResult result;
    result.reduced_path = reduced_;
    for (std::size_t w0 = 0; w0 < works.size(); w0 += kWaveWidth) {
      const std::size_t w1 = std::min(works.size(), w0 + kWaveWidth);
      std::vector<LocalResult> local(w1 - w0);
      const auto count = static_cast<std::int64_t>(w1 - w0);
#pragma omp parallel for schedule(dynamic, 1) num_threads(opt_.threads)
      for (std::int64_t i = 0; i < count; ++i) {
        local[i] = process(works[w0 + i], bits, rr_set);
      }
      for (std::size_t i = 0; i < local.size(); ++i) {
        result.tables_tested += local[i].tested;
        for (const auto& a : local[i].new_d) {
          const auto idx = static_cast<std::size_t>(a.d + n_);
          if (bits[idx]) continue;
          bits[idx] = 1;
          witness[idx] = Witness{works[w0 + i].prefix, a.item};
        }
        rr_set.insert(local[i].new_rr.begin(), local[i].new_rr.end());
      }
    }
    for (std::size_t idx = 0; idx < bits.size(); ++idx) {
      if (bits[idx]) result.accepted.push_back(static_cast<std::int64_t>(idx) - n_);
    }
    if (!result.accepted.empty()) {
      const auto lo = static_cast<std::size_t>(result.accepted.front() + n_);
      const auto hi = static_cast<std::size_t>(result.accepted.back() + n_);
      result.lo_witness = build_witness(*witness[lo], result.accepted.front());
      result.hi_witness = build_witness(*witness[hi], result.accepted.back());
    }
    result.accepted_rr.assign(rr_set.begin(), rr_set.end());
    std::sort(result.accepted_rr.begin(), result.accepted_rr.end(), ratio_less);
    return result;
  }

 private:
  struct Prefix {
    std::vector<T> p;
    std::vector<double> var;
    std::vector<T> top;
    std::int64_t pmin = 0;
    std::int64_t pmax = 0;
    std::int64_t dlo = 0;
    std::int64_t dhi = 0;
    std::int64_t base1 = 0;
    std::int64_t base2 = 0;
    std::int64_t free = 0;
    std::int64_t dfix = 0;
  };

  void build_blocks() {
    std::vector<std::vector<std::uint16_t>> counts(K_);
    for (int k = 0; k < K_; ++k) counts[k] = prefix_counts(k);
    std::vector<Block<T>> blocks(K_);
    for (int k = 0; k < K_; ++k) {
      blocks[k].stratum = k;
      blocks[k].items = stratum_items(obs_, k, reduced_ && obs_.design()[k].balanced());
    }
    // The largest block is swept innermost.
    int last = 0;
    for (int k = 1; k < K_; ++k) {
      if (blocks[k].items.size() >= blocks[last].items.size()) last = k;
    }
    blocks[last].materialized = K_ > 1;
    for (int k = 0; k < K_; ++k) {
      if (blocks[k].materialized) materialize(blocks[k], counts[k]);
    }
    counts_ = std::move(counts);
    for (int k = 0; k < K_; ++k) {
      if (k != last) prefix_blocks_.push_back(std::move(blocks[k]));
    }
    last_ = std::move(blocks[last]);
  }

  std::vector<std::uint16_t> prefix_counts(int k) const {
    const int n = obs_.design()[k].n;
    std::vector<std::uint16_t> cnt(static_cast<std::size_t>(R_) * (n + 1));
    for (int r = 0; r < R_; ++r) {
      const auto subset = alloc_.subset(r, k);
      std::uint16_t* row = cnt.data() + static_cast<std::size_t>(r) * (n + 1);
      std::uint16_t c = 0;
      std::size_t i = 0;
      for (int p = 0; p <= n; ++p) {
        row[p] = c;
        if (i < subset.size() && subset[i] == p) {
          ++c;
          ++i;
        }
      }
    }
    return cnt;
  }

  void fill_effects(const Item& it, int k, const std::vector<std::uint16_t>& cnt, T* out,
                    double* var) const {
    const int n = obs_.design()[k].n;
    const int m = obs_.design()[k].m;
    const int c = n - m;
    const std::int64_t w = scale_.weight(k);
    const std::size_t stride = static_cast<std::size_t>(n) + 1;
    if (it.cls) {
      const int u11 = it.table.v11;
      const int u00 = it.table.v00;
      for (int r = 0; r < R_; ++r) {
        const std::uint16_t* row = cnt.data() + r * stride;
        const int x11 = row[u11];
        const int x00 = m - row[n - u00];
        out[r] = static_cast<T>(D_ * ((2 * x11 - u11) - (2 * x00 - u00)));
      }
      return;
    }
    const auto& v = it.table;
    const int p1 = v.v11;
    const int p2 = v.v11 + v.v10;
    const int p3 = p2 + v.v01;
    const std::int64_t shift = D_ * v.effect();
    const double share = static_cast<double>(n) / n_;
    for (int r = 0; r < R_; ++r) {
      const std::uint16_t* row = cnt.data() + r * stride;
      const int x11 = row[p1];
      const int a = row[p2];
      const int x01 = row[p3] - a;
      const int b = v.v11 - x11 + v.v01 - x01;
      out[r] = static_cast<T>(w * (static_cast<std::int64_t>(a) * c -
                                   static_cast<std::int64_t>(b) * m) -
                              shift);
      if (var != nullptr) {
        const double s1 = static_cast<double>(a) * (m - a) / (static_cast<double>(m) * (m - 1));
        const double s0 = static_cast<double>(b) * (c - b) / (static_cast<double>(c) * (c - 1));
        var[r] = share * share * (s1 / m + s0 / c);
      }
    }
  }

  void top_abs(const T* v, T* out, std::vector<T>& scratch) const {
    if (L_ == 0) return;
    scratch.resize(R_);
    for (int r = 0; r < R_; ++r) scratch[r] = v[r] < 0 ? static_cast<T>(-v[r]) : v[r];
    std::partial_sort(scratch.begin(), scratch.begin() + L_, scratch.end(), std::greater<T>());
    std::copy(scratch.begin(), scratch.begin() + L_, out);
  }

  void materialize(Block<T>& block, const std::vector<std::uint16_t>& cnt) const {
    const std::size_t items = block.items.size();
    block.e.resize(items * R_);
    block.emin.resize(items);
    block.emax.resize(items);
    block.top.resize(items * L_);
    const bool studentized = opt_.stat == StatisticKind::Studentized;
    if (studentized) block.var.resize(items * R_);
    const auto count = static_cast<std::int64_t>(items);
#pragma omp parallel num_threads(opt_.threads)
    {
      std::vector<T> scratch;
#pragma omp for schedule(static)
      for (std::int64_t i = 0; i < count; ++i) {
        T* e = block.e.data() + i * R_;
        fill_effects(block.items[i], block.stratum, cnt, e,
                     studentized ? block.var.data() + i * R_ : nullptr);
        const auto [mn, mx] = std::minmax_element(e, e + R_);
        block.emin[i] = R_ > 0 ? *mn : T{0};
        block.emax[i] = R_ > 0 ? *mx : T{0};
        top_abs(e, block.top.data() + i * L_, scratch);
      }
    }
  }

  std::vector<Work> plan() const {
    std::int64_t prefixes = 1;
    for (const auto& b : prefix_blocks_) prefixes *= static_cast<std::int64_t>(b.items.size());
    const int items = static_cast<int>(last_.items.size());
    std::vector<Work> works;
    if (prefixes == 0 || items == 0) return works;
    std::int64_t chunks = 1;
    if (prefixes < kMinWorkItems) chunks = (kMinWorkItems + prefixes - 1) / prefixes;
    chunks = std::min<std::int64_t>(chunks, items);
    for (std::int64_t p = 0; p < prefixes; ++p) {
      for (std::int64_t c = 0; c < chunks; ++c) {
        works.push_back({p, static_cast<int>(items * c / chunks),
                         static_cast<int>(items * (c + 1) / chunks)});
      }
    }
    return works;
  }

  std::vector<int> decode(std::int64_t prefix) const {
    std::vector<int> idx(prefix_blocks_.size());
    for (std::size_t b = prefix_blocks_.size(); b-- > 0;) {
      const auto size = static_cast<std::int64_t>(prefix_blocks_[b].items.size());
      idx[b] = static_cast<int>(prefix % size);
      prefix /= size;
    }
    return idx;
  }

  Prefix make_prefix(std::int64_t index, std::vector<T>& scratch) const {
    Prefix pre;
    pre.p.assign(R_, T{0});
    if (opt_.stat == StatisticKind::Studentized) pre.var.assign(R_, 0.0);
    const auto idx = decode(index);
    for (std::size_t b = 0; b < prefix_blocks_.size(); ++b) {
      const auto& block = prefix_blocks_[b];
      const Item& it = block.items[idx[b]];
      const T* e = block.e.data() + static_cast<std::size_t>(idx[b]) * R_;
      for (int r = 0; r < R_; ++r) pre.p[r] = static_cast<T>(pre.p[r] + e[r]);
      if (!pre.var.empty()) {
        const double* v = block.var.data() + static_cast<std::size_t>(idx[b]) * R_;
        for (int r = 0; r < R_; ++r) pre.var[r] += v[r];
      }
      pre.dlo += it.dlo;
      pre.dhi += it.dhi;
      pre.base1 += it.base1;
      pre.base2 += it.base2;
      pre.free += it.free;
      pre.dfix += it.dfix;
    }
    if (R_ > 0) {
      const auto [mn, mx] = std::minmax_element(pre.p.begin(), pre.p.end());
      pre.pmin = *mn;
      pre.pmax = *mx;
    }
    pre.top.resize(L_);
    top_abs(pre.p.data(), pre.top.data(), scratch);
    return pre;
  }

  // True when some split of the threshold between prefix and item proves
  // fewer than need_ replicates can reach it.
  bool union_rejects(const T* top_p, const T* top_e, std::int64_t thr) const {
    int j = L_;
    for (int i = 0; i < L_; ++i) {
      const std::int64_t x = thr - static_cast<std::int64_t>(top_p[i]);
      while (j > 0 && static_cast<std::int64_t>(top_e[j - 1]) < x) --j;
      if (i + j < need_) return true;
    }
    return false;
  }

  bool scan_accepts(const T* p, const T* e, std::int64_t thr) const {
    if (thr > std::numeric_limits<T>::max()) return false;
    const T t = static_cast<T>(thr);
    std::int64_t count = 0;
    for (int r0 = 0; r0 < R_; r0 += kScanBlock) {
      const int r1 = std::min(R_, r0 + kScanBlock);
      int c = 0;
      for (int r = r0; r < r1; ++r) {
        const T s = static_cast<T>(p[r] + e[r]);
        c += (s >= t) | (s <= -t);
      }
      count += c;
      if (count >= need_) return true;
      if (count + (R_ - r1) < need_) return false;
    }
    return count >= need_;
  }

  bool generic_accepts(const Prefix& pre, const T* e, const double* var, std::int64_t d,
                       std::vector<std::int64_t>& q) const {
    const std::int64_t center = D_ * d;
    if (opt_.stat == StatisticKind::Sterne) {
      if (need_ == 0) return false;
      q.resize(R_);
      for (int r = 0; r < R_; ++r) q[r] = static_cast<std::int64_t>(pre.p[r]) + e[r] + center;
      std::sort(q.begin(), q.end());
      const auto [lo, hi] = sterne_window(q, need_, 2 * center);
      return lo <= q_obs_ && q_obs_ <= hi;
    }
    const std::int64_t total = D_ * n_;
    const double t_obs = studentized_value(q_obs_ - center, total, v_obs_);
    std::int64_t count = 0;
    for (int r = 0; r < R_; ++r) {
      const double t = studentized_value(static_cast<std::int64_t>(pre.p[r]) + e[r], total,
                                         pre.var[r] + var[r]);
      if (at_least(t, t_obs)) ++count;
      if (count >= need_) return true;
      if (count + (R_ - r - 1) < need_) return false;
    }
    return count >= need_;
  }

  static double studentized_value(std::int64_t diff, std::int64_t scale, double variance) {
    if (diff == 0) return 0.0;
    if (variance <= 0.0) return kInfinity;
    return std::abs(static_cast<double>(diff)) / static_cast<double>(scale) / std::sqrt(variance);
  }

  LocalResult process(const Work& work, const std::vector<char>& snapshot,
                      const std::set<Ratio>& rr_snapshot) const {
    LocalResult out;
    std::vector<T> scratch;
    std::vector<T> e_buf;
    std::vector<double> var_buf;
    std::vector<T> top_buf(L_);
    std::vector<std::int64_t> q;
    const Prefix pre = make_prefix(work.prefix, scratch);
    std::vector<char> seen(snapshot);
    std::set<Ratio> rr_local;
    const bool studentized = opt_.stat == StatisticKind::Studentized;
    const bool absdiff = opt_.stat == StatisticKind::AbsDiff;
    for (int j = work.begin; j < work.end; ++j) {
      const Item& it = last_.items[j];
      const T* e = nullptr;
      const double* var = nullptr;
      const T* top = nullptr;
      std::int64_t emin = 0;
      std::int64_t emax = 0;
      if (last_.materialized) {
        e = last_.e.data() + static_cast<std::size_t>(j) * R_;
        if (studentized) var = last_.var.data() + static_cast<std::size_t>(j) * R_;
        top = last_.top.data() + static_cast<std::size_t>(j) * L_;
        emin = last_.emin[j];
        emax = last_.emax[j];
      }
      bool computed = last_.materialized;
      const std::int64_t dlo = pre.dlo + it.dlo;
      const std::int64_t dhi = pre.dhi + it.dhi;
      for (std::int64_t d = dlo; d <= dhi; d += 2) {
        const auto idx = static_cast<std::size_t>(d + n_);
        Ratio rr;
        if (opt_.track_rr) {
          const std::int64_t free = pre.free + it.free;
          const std::int64_t a = d - pre.dfix - it.dfix;
          rr = normalized(pre.base1 + it.base1 + (free + a) / 2,
                          pre.base2 + it.base2 + (free - a) / 2);
        }
        if (opt_.memo && seen[idx] &&
            (!opt_.track_rr || rr_snapshot.contains(rr) || rr_local.contains(rr))) {
          continue;
        }
        ++out.tested;
        if (!computed) {
          e_buf.resize(R_);
          if (studentized) var_buf.resize(R_);
          fill_effects(it, last_.stratum, counts_[last_.stratum], e_buf.data(),
                       studentized ? var_buf.data() : nullptr);
          e = e_buf.data();
          var = studentized ? var_buf.data() : nullptr;
          if (R_ > 0) {
            const auto [mn, mx] = std::minmax_element(e_buf.begin(), e_buf.end());
            emin = *mn;
            emax = *mx;
          }
          top_abs(e, top_buf.data(), scratch);
          top = top_buf.data();
          computed = true;
        }
        bool accept = false;
        if (absdiff) {
          const std::int64_t thr = std::abs(q_obs_ - D_ * d);
          if (need_ == 0 || thr == 0) {
            accept = need_ <= R_;
          } else if (need_ > R_) {
            accept = false;
          } else if (std::max(std::abs(pre.pmax + emax), std::abs(pre.pmin + emin)) < thr) {
            accept = false;
          } else if (union_rejects(pre.top.data(), top, thr)) {
            accept = false;
          } else {
            accept = scan_accepts(pre.p.data(), e, thr);
          }
        } else {
          accept = generic_accepts(pre, e, var, d, q);
        }
        if (!accept) continue;
        if (!seen[idx]) {
          seen[idx] = 1;
          out.new_d.push_back({d, j});
        }
        if (opt_.track_rr && !rr_snapshot.contains(rr) && rr_local.insert(rr).second) {
          out.new_rr.push_back(rr);
        }
      }
    }
    return out;
  }

  PotentialTable build_witness(const Witness& w, std::int64_t d) const {
    std::vector<const Item*> chosen(K_);
    const auto idx = decode(w.prefix);
    for (std::size_t b = 0; b < prefix_blocks_.size(); ++b) {
      chosen[prefix_blocks_[b].stratum] = &prefix_blocks_[b].items[idx[b]];
    }
    chosen[last_.stratum] = &last_.items[w.item];
    bool any_class = false;
    std::int64_t a = d;
    RepresentativeKey key;
    for (int k = 0; k < K_; ++k) {
      const Item& it = *chosen[k];
      any_class = any_class || it.cls;
      a -= it.dfix;
      key.u11.push_back(it.table.v11);
      key.u00.push_back(it.table.v00);
      key.u10.push_back(it.table.v10);
    }
    if (!any_class) {
      std::vector<StratumPotential> strata;
      for (int k = 0; k < K_; ++k) strata.push_back(chosen[k]->table);
      return PotentialTable(std::move(strata));
    }
    key.a = a;
    auto table = representative_table(key, obs_);
    if (!table) throw std::logic_error("accepted class has no representative table");
    return *table;
  }

  const OutcomeTable& obs_;
  const AllocationSet& alloc_;
  EngineOptions opt_;
  bool reduced_;
  StatScale scale_;
  int K_;
  int n_;
  int R_;
  std::int64_t D_ = 1;
  std::int64_t q_obs_ = 0;
  std::int64_t need_ = 0;
  int L_ = 0;
  double v_obs_ = 0.0;
  std::vector<std::vector<std::uint16_t>> counts_;
  std::vector<Block<T>> prefix_blocks_;
  Block<T> last_;
};

}  // namespace

double estimate_spt_tables(const OutcomeTable& obs, bool reduced) {
  double total = 1.0;
  double span = 0.0;
  bool any_class = false;
  for (int k = 0; k < obs.strata(); ++k) {
    const bool cls = reduced && obs.design()[k].balanced();
    const auto items = stratum_items(obs, k, cls);
    total *= static_cast<double>(items.size());
    if (cls) {
      any_class = true;
      int widest = 0;
      for (const auto& it : items) widest = std::max(widest, it.dhi - it.dlo);
      span += widest / 2;
    }
  }
  return any_class ? total * (span + 1.0) : total;
}

EngineResult run_spt_engine(const OutcomeTable& obs, const AllocationSet& alloc,
                            const EngineOptions& options) {
  if (!(alloc.design() == obs.design())) {
    throw ValidationError("allocation set was drawn for a different design");
  }
  const bool reduced = options.reduced && options.stat == StatisticKind::AbsDiff &&
                       obs.design().balanced_count() > 0;
  const double estimate = estimate_spt_tables(obs, reduced);
  if (estimate > static_cast<double>(options.budget)) {
    throw IntractableError("SPT would test about " + std::to_string(static_cast<long long>(estimate)) +
                           " potential tables, above the budget of " +
                           std::to_string(options.budget) + "; use CPT or ESI instead");
  }
  const StatScale scale(obs.design());
  const bool narrow = 2 * static_cast<__int128>(scale.D()) * obs.design().n() <
                      (static_cast<__int128>(1) << 31);
  if (narrow) return Engine<std::int32_t>(obs, alloc, options, reduced).run();
  return Engine<std::int64_t>(obs, alloc, options, reduced).run();
}

}  // namespace stratexact::detail
