#pragma once

#include <sulp/errors.hpp>

#include <ostream>

namespace sulp::cli {

template <class F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace sulp::cli
