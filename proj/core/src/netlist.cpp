#include "exsim/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

#include "exsim/errors.hpp"

namespace exsim {

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

/// "1k" -> 1000, "10u" -> 1e-5, "2.5MEG" -> 2.5e6. Letters after a
/// recognized suffix are ignored (SPICE habit: 10uF).
bool parse_value(const std::string& tok, double& out) {
    const char* s = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s) return false;
    std::string suffix = upper(end);
    double mult = 1.0;
    if (!suffix.empty()) {
        if (suffix.rfind("MEG", 0) == 0)
            mult = 1e6;
        else {
            switch (suffix[0]) {
                case 'F': mult = 1e-15; break;
                case 'P': mult = 1e-12; break;
                case 'N': mult = 1e-9; break;
                case 'U': mult = 1e-6; break;
                case 'M': mult = 1e-3; break;
                case 'K': mult = 1e3; break;
                case 'G': mult = 1e9; break;
                default:
                    // bare unit letters like "V" or "A"
                    if (std::isalpha(static_cast<unsigned char>(suffix[0]))) mult = 1.0;
                    else return false;
            }
        }
    }
    out = v * mult;
    return true;
}

struct Line {
    std::string text;
    int number;
};

/// Joins continuations, strips comments, remembers the first "*" line as title.
std::vector<Line> logical_lines(const std::string& text, std::string& title) {
    std::vector<Line> out;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool title_seen = false;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (auto dollar = raw.find('$'); dollar != std::string::npos) raw.erase(dollar);
        std::size_t first = raw.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (raw[first] == '*') {
            if (!title_seen) {
                title = raw.substr(first + 1);
                std::size_t p = title.find_first_not_of(" \t");
                title = p == std::string::npos ? "" : title.substr(p);
                title_seen = true;
            }
            continue;
        }
        if (raw[first] == '+') {
            if (out.empty()) throw ParseError("continuation line with no previous card", lineno, "+");
            out.back().text += " " + raw.substr(first + 1);
            continue;
        }
        out.push_back({raw.substr(first), lineno});
    }
    return out;
}

/// Splits on whitespace, commas and '=' while keeping parenthesized
/// groups intact as single argument lists.
std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> toks;
    std::string cur;
    int depth = 0;
    for (char ch : s) {
        if (ch == '(') {
            ++depth;
            cur.push_back(ch);
        } else if (ch == ')') {
            --depth;
            cur.push_back(ch);
        } else if (depth == 0 && (ch == ' ' || ch == '\t' || ch == ',' )) {
            if (!cur.empty()) {
                toks.push_back(cur);
                cur.clear();
            }
        } else if (depth > 0 && (ch == ',')) {
            cur.push_back(' ');
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) toks.push_back(cur);
    return toks;
}

std::vector<double> number_list(const std::string& inner, int line) {
    std::vector<double> vals;
    std::istringstream in(inner);
    std::string tok;
    while (in >> tok) {
        double v;
        if (!parse_value(tok, v)) throw ParseError("bad number '" + tok + "'", line, tok);
        vals.push_back(v);
    }
    return vals;
}

SourceWaveform parse_source_spec(const std::vector<std::string>& toks, std::size_t from,
                                 int line) {
    if (from >= toks.size()) throw ParseError("source card missing value", line);
    std::string head = upper(toks[from]);

    auto paren_args = [&](const std::string& t) -> std::string {
        auto l = t.find('(');
        auto r = t.rfind(')');
        if (l == std::string::npos || r == std::string::npos || r < l)
            throw ParseError("malformed source arguments '" + t + "'", line, t);
        return t.substr(l + 1, r - l - 1);
    };

    if (head.rfind("PWL", 0) == 0) {
        // arguments may be inside the same token: PWL(0 0 1n 1)
        std::string args = paren_args(toks[from]);
        std::vector<double> v = number_list(args, line);
        if (v.size() < 2 || v.size() % 2 != 0)
            throw ParseError("PWL needs an even number of values", line);
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i + 1 < v.size(); i += 2) pts.emplace_back(v[i], v[i + 1]);
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (!(pts[i].first > pts[i - 1].first))
                throw ParseError("PWL breakpoints must increase in time", line);
        return SourceWaveform::piecewise_linear(std::move(pts));
    }
    if (head.rfind("PULSE", 0) == 0) {
        std::string args = paren_args(toks[from]);
        std::vector<double> v = number_list(args, line);
        if (v.size() < 2) throw ParseError("PULSE needs at least v1 v2", line);
        v.resize(7, 0.0);
        SourceWaveform::Pulse p{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
        return SourceWaveform::pulsed(p);
    }
    if (head == "DC") {
        if (from + 1 >= toks.size()) throw ParseError("DC missing value", line);
        double v;
        if (!parse_value(toks[from + 1], v))
            throw ParseError("bad DC value '" + toks[from + 1] + "'", line, toks[from + 1]);
        return SourceWaveform::dc(v);
    }
    double v;
    if (!parse_value(toks[from], v))
        throw ParseError("bad source value '" + toks[from] + "'", line, toks[from]);
    return SourceWaveform::dc(v);
}

void parse_params(const std::vector<std::string>& toks, std::size_t from, DeviceCard& card,
                  int line) {
    for (std::size_t i = from; i < toks.size(); ++i) {
        auto eq = toks[i].find('=');
        if (eq == std::string::npos) {
            if (card.kind == DeviceKind::Mosfet && card.model_label.empty()) {
                card.model_label = upper(toks[i]);
                continue;
            }
            throw ParseError("expected NAME=VALUE, got '" + toks[i] + "'", line, toks[i]);
        }
        std::string key = upper(toks[i].substr(0, eq));
        double v;
        if (!parse_value(toks[i].substr(eq + 1), v))
            throw ParseError("bad parameter value in '" + toks[i] + "'", line, toks[i]);
        card.params[key] = v;
    }
}

}  // namespace

NetlistDoc parse_netlist(const std::string& text) {
    NetlistDoc doc;
    std::set<std::string> seen_names;

    for (const Line& ln : logical_lines(text, doc.title)) {
        std::vector<std::string> toks = tokenize(ln.text);
        if (toks.empty()) continue;
        const std::string head = upper(toks[0]);

        if (head[0] == '.') {
            if (head == ".END") break;
            if (head == ".TRAN") {
                if (toks.size() < 3) throw ParseError(".TRAN needs step and stop time", ln.number);
                TranDirective tr;
                if (!parse_value(toks[1], tr.step_hint) || !parse_value(toks[2], tr.stop_time))
                    throw ParseError("bad .TRAN values", ln.number);
                if (doc.tran) throw ParseError("duplicate .TRAN directive", ln.number);
                doc.tran = tr;
                continue;
            }
            if (head == ".OPTIONS" || head == ".OPTION") {
                for (std::size_t i = 1; i < toks.size(); ++i) {
                    auto eq = toks[i].find('=');
                    if (eq == std::string::npos)
                        throw ParseError("expected KEY=VALUE in .OPTIONS", ln.number, toks[i]);
                    std::string key = upper(toks[i].substr(0, eq));
                    double v;
                    if (!parse_value(toks[i].substr(eq + 1), v))
                        throw ParseError("bad .OPTIONS value in '" + toks[i] + "'", ln.number,
                                         toks[i]);
                    if (key == "ERRBUDGET") doc.options.err_budget = v;
                    else if (key == "KRYEPS") doc.options.krylov_eps = v;
                    else if (key == "GMIN") doc.options.gmin = v;
                    else if (key == "MMAX") doc.options.m_max = static_cast<int>(v);
                    else if (key == "HMIN") doc.options.hmin = v;
                    else if (key == "HMAX") doc.options.hmax = v;
                    else throw ParseError("unknown .OPTIONS key '" + key + "'", ln.number, key);
                }
                continue;
            }
            throw ParseError("unknown directive '" + head + "'", ln.number, head);
        }

        DeviceCard card;
        card.name = head;
        card.line = ln.number;
        const char k = head[0];
        auto need = [&](std::size_t n, const char* what) {
            if (toks.size() < n)
                throw ParseError(std::string("card '") + head + "' missing " + what, ln.number);
        };
        switch (k) {
            case 'R':
            case 'C':
            case 'L': {
                need(4, "nodes or value");
                card.kind = k == 'R'   ? DeviceKind::Resistor
                            : k == 'C' ? DeviceKind::Capacitor
                                       : DeviceKind::Inductor;
                card.nodes = {toks[1], toks[2]};
                if (!parse_value(toks[3], card.value))
                    throw ParseError("bad value '" + toks[3] + "'", ln.number, toks[3]);
                if (card.value <= 0.0)
                    throw ParseError("element value must be positive", ln.number, toks[3]);
                break;
            }
            case 'V':
            case 'I': {
                need(4, "nodes or source spec");
                card.kind = k == 'V' ? DeviceKind::VoltageSource : DeviceKind::CurrentSource;
                card.nodes = {toks[1], toks[2]};
                card.source = parse_source_spec(toks, 3, ln.number);
                break;
            }
            case 'D': {
                need(3, "nodes");
                card.kind = DeviceKind::Diode;
                card.nodes = {toks[1], toks[2]};
                parse_params(toks, 3, card, ln.number);
                break;
            }
            case 'M': {
                need(5, "nodes");
                card.kind = DeviceKind::Mosfet;
                card.nodes = {toks[1], toks[2], toks[3], toks[4]};
                parse_params(toks, 5, card, ln.number);
                break;
            }
            default:
                throw ParseError("unknown device kind '" + head + "'", ln.number, head);
        }
        if (!seen_names.insert(card.name).second)
            throw ParseError("duplicate device name '" + card.name + "'", ln.number, card.name);
        for (std::string& n : card.nodes) n = upper(n);
        doc.devices.push_back(std::move(card));
    }
    return doc;
}

namespace {

std::string fmt(double v) {
    // round-trip exact so reparsing reproduces the same doubles
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string source_text(const SourceWaveform& s) {
    switch (s.kind) {
        case SourceWaveform::Kind::Dc:
            return "DC " + fmt(s.dc_value);
        case SourceWaveform::Kind::Pwl: {
            std::string out = "PWL(";
            bool first = true;
            for (const auto& [t, v] : s.pwl) {
                if (!first) out += " ";
                out += fmt(t) + " " + fmt(v);
                first = false;
            }
            return out + ")";
        }
        case SourceWaveform::Kind::Pulse: {
            const auto& p = s.pulse;
            return "PULSE(" + fmt(p.v1) + " " + fmt(p.v2) + " " + fmt(p.delay) + " " +
                   fmt(p.rise) + " " + fmt(p.fall) + " " + fmt(p.width) + " " + fmt(p.period) +
                   ")";
        }
    }
    return {};
}

}  // namespace

std::string pretty_print(const NetlistDoc& doc) {
    std::ostringstream os;
    os << "* " << doc.title << "\n";
    for (const DeviceCard& d : doc.devices) {
        os << d.name;
        for (const std::string& n : d.nodes) os << " " << n;
        switch (d.kind) {
            case DeviceKind::Resistor:
            case DeviceKind::Capacitor:
            case DeviceKind::Inductor:
                os << " " << fmt(d.value);
                break;
            case DeviceKind::VoltageSource:
            case DeviceKind::CurrentSource:
                os << " " << source_text(d.source);
                break;
            case DeviceKind::Diode:
            case DeviceKind::Mosfet:
                if (!d.model_label.empty()) os << " " << d.model_label;
                for (const auto& [k, v] : d.params) os << " " << k << "=" << fmt(v);
                break;
        }
        os << "\n";
    }
    os << ".OPTIONS ERRBUDGET=" << fmt(doc.options.err_budget)
       << " KRYEPS=" << fmt(doc.options.krylov_eps) << " GMIN=" << fmt(doc.options.gmin)
       << " MMAX=" << doc.options.m_max;
    if (doc.options.hmin) os << " HMIN=" << fmt(*doc.options.hmin);
    if (doc.options.hmax) os << " HMAX=" << fmt(*doc.options.hmax);
    os << "\n";
    if (doc.tran)
        os << ".TRAN " << fmt(doc.tran->step_hint) << " " << fmt(doc.tran->stop_time) << "\n";
    os << ".END\n";
    return os.str();
}

}  // namespace exsim
