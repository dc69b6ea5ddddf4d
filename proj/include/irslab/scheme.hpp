#pragma once

#include <stdexcept>
#include <string>

namespace irslab {

enum class Scheme { Random, RRC, OBF, TD, ATD, CT };

inline std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::Random: return "random";
        case Scheme::RRC: return "rrc";
        case Scheme::OBF: return "obf";
        case Scheme::TD: return "td";
        case Scheme::ATD: return "atd";
        case Scheme::CT: return "ct";
    }
    throw std::logic_error("unreachable");
}

inline Scheme scheme_from_string(const std::string& name) {
    if (name == "random") return Scheme::Random;
    if (name == "rrc") return Scheme::RRC;
    if (name == "obf") return Scheme::OBF;
    if (name == "td") return Scheme::TD;
    if (name == "atd") return Scheme::ATD;
    if (name == "ct") return Scheme::CT;
    throw std::invalid_argument("unknown scheme: " + name);
}

}  // namespace irslab
