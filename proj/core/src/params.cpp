#include "bmqt/params.hpp"

#include <sstream>

namespace bmqt {

namespace {
std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}
}  // namespace

std::vector<std::string> ModelParams::violations() const {
  std::vector<std::string> out;
  if (!(k > 0.0)) out.push_back("defiA violated: k = " + num(k) + " must be strictly positive");
  if (!(m > 0.0)) out.push_back("defiA violated: m = " + num(m) + " must be strictly positive");
  if (k > 0.0 && m > 0.0) {
    const double cap_exp = (3.0 * k + 2.0 * m) / 3.0;
    if (!(cap_exp > 9.0))
      out.push_back("defiA violated: A = (3k+2m)/3 = " + num(cap_exp) + " <= 9 (require A > 9)");
    if (!(m > 1.5))
      out.push_back("defiA violated: m = " + num(m) + " <= 3/2 (require 3/2 < m <= 6k/5)");
    if (!(m <= 1.2 * k))
      out.push_back("defiA violated: m = " + num(m) + " > 6k/5 = " + num(1.2 * k));
  }
  if (!(mu0 > 0.0))
    out.push_back("h11 violated: viscosity lower bound mu0 = " + num(mu0) +
                  " must be strictly positive");
  if (!(mu1 >= 0.0))
    out.push_back("h11 violated: viscosity range mu1 = " + num(mu1) + " must be nonnegative");
  if (!(A0 > 0.0) || !(Ak > 0.0))
    out.push_back("h12 violated: conductivity coefficients A0 = " + num(A0) + ", Ak = " + num(Ak) +
                  " must be strictly positive");
  if (!(A_minus2 >= 0.0))
    out.push_back("h12s violated: singular coefficient A_minus2 = " + num(A_minus2) +
                  " must be nonnegative");
  if (!(Gamma0 > 0.0) || !(Gamma1 > 0.0))
    out.push_back("h13 violated: Gamma0 = " + num(Gamma0) + ", Gamma1 = " + num(Gamma1) +
                  " must be strictly positive");
  if (!(a > 0.0)) out.push_back("specific heat violated: a = " + num(a) + " must be strictly positive");
  if (!(lambda_bulk >= 0.0))
    out.push_back("bulk coupling violated: lambda_bulk = " + num(lambda_bulk) +
                  " must be nonnegative");
  return out;
}

}  // namespace bmqt
