#include "dialeval/porter_stemmer.hpp"

#include <initializer_list>
#include <utility>

namespace dialeval {

namespace {

class Stemmer {
  public:
    explicit Stemmer(std::string_view w) : b_(w) {}

    std::string run() {
        if (b_.size() <= 2) return b_;
        step1ab();
        if (b_.size() > 1) {
            step1c();
            step2();
            step3();
            step4();
            step5();
        }
        return b_;
    }

  private:
    std::string b_;
    std::size_t j_ = 0; // end of the stem (exclusive) while testing a suffix

    bool cons(std::size_t i) const {
        switch (b_[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !cons(i - 1);
        default:
            return true;
        }
    }

    // Number of VC sequences in b_[0, j_).
    int m() const {
        int n = 0;
        std::size_t i = 0;
        while (true) {
            if (i >= j_) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i >= j_) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i >= j_) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (std::size_t i = 0; i < j_; ++i)
            if (!cons(i)) return true;
        return false;
    }

    // b_[0, end) ends in a double consonant.
    bool doublec(std::size_t end) const {
        if (end < 2) return false;
        if (b_[end - 1] != b_[end - 2]) return false;
        return cons(end - 1);
    }

    // cvc at the end of b_[0, end), second c not w, x or y.
    bool cvc(std::size_t end) const {
        if (end < 3) return false;
        const std::size_t i = end - 1;
        if (!cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        const char ch = b_[i];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view s) {
        if (s.size() > b_.size()) return false;
        if (b_.compare(b_.size() - s.size(), s.size(), s) != 0) return false;
        j_ = b_.size() - s.size();
        return true;
    }

    void setto(std::string_view s) { b_.replace(j_, b_.size() - j_, s); }

    void r(std::string_view s) {
        if (m() > 0) setto(s);
    }

    void step1ab() {
        if (b_.back() == 's') {
            if (ends("sses"))
                setto("ss");
            else if (ends("ies"))
                setto("i");
            else if (b_.size() >= 2 && b_[b_.size() - 2] != 's')
                b_.pop_back();
        }
        if (ends("eed")) {
            if (m() > 0) b_.pop_back();
            return;
        }
        if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            b_.resize(j_);
            if (ends("at"))
                setto("ate");
            else if (ends("bl"))
                setto("ble");
            else if (ends("iz"))
                setto("ize");
            else if (doublec(b_.size())) {
                const char ch = b_.back();
                if (ch != 'l' && ch != 's' && ch != 'z') b_.pop_back();
            } else {
                j_ = b_.size();
                if (m() == 1 && cvc(b_.size())) b_.push_back('e');
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_.back() = 'i';
    }

    void apply(std::initializer_list<std::pair<std::string_view, std::string_view>> rules) {
        for (auto [from, to] : rules) {
            if (ends(from)) {
                r(to);
                return;
            }
        }
    }

    void step2() {
        if (b_.size() < 2) return;
        switch (b_[b_.size() - 2]) {
        case 'a': apply({{"ational", "ate"}, {"tional", "tion"}}); break;
        case 'c': apply({{"enci", "ence"}, {"anci", "ance"}}); break;
        case 'e': apply({{"izer", "ize"}}); break;
        case 'l': apply({{"abli", "able"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}}); break;
        case 'o': apply({{"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}}); break;
        case 's': apply({{"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}}); break;
        case 't': apply({{"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}}); break;
        default: break;
        }
    }

    void step3() {
        switch (b_.back()) {
        case 'e': apply({{"icate", "ic"}, {"ative", ""}, {"alize", "al"}}); break;
        case 'i': apply({{"iciti", "ic"}}); break;
        case 'l': apply({{"ical", "ic"}, {"ful", ""}}); break;
        case 's': apply({{"ness", ""}}); break;
        default: break;
        }
    }

    void step4() {
        if (b_.size() < 2) return;
        bool hit = false;
        switch (b_[b_.size() - 2]) {
        case 'a': hit = ends("al"); break;
        case 'c': hit = ends("ance") || ends("ence"); break;
        case 'e': hit = ends("er"); break;
        case 'i': hit = ends("ic"); break;
        case 'l': hit = ends("able") || ends("ible"); break;
        case 'n': hit = ends("ant") || ends("ement") || ends("ment") || ends("ent"); break;
        case 'o':
            if (ends("ion") && j_ > 0 && (b_[j_ - 1] == 's' || b_[j_ - 1] == 't'))
                hit = true;
            else
                hit = ends("ou");
            break;
        case 's': hit = ends("ism"); break;
        case 't': hit = ends("ate") || ends("iti"); break;
        case 'u': hit = ends("ous"); break;
        case 'v': hit = ends("ive"); break;
        case 'z': hit = ends("ize"); break;
        default: break;
        }
        if (hit && m() > 1) b_.resize(j_);
    }

    void step5() {
        j_ = b_.size();
        if (b_.back() == 'e') {
            j_ = b_.size() - 1;
            const int a = m();
            if (a > 1 || (a == 1 && !cvc(b_.size() - 1))) b_.pop_back();
        }
        j_ = b_.size();
        if (b_.back() == 'l' && doublec(b_.size()) && m() > 1) b_.pop_back();
    }
};

} // namespace

std::string porter_stem(std::string_view word) { return Stemmer(word).run(); }

} // namespace dialeval
