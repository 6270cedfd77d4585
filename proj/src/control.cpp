#include "uoi/control.hpp"

#include <cmath>
#include <numbers>

namespace uoi {

double Reference::at(Index slot) const {
  if (kind == Kind::constant) return level;
  return level + amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(slot) / period);
}

void LinearPlant::validate() const {
  if (b == 0.0) throw InvalidParameter("plant: control gain b must be nonzero");
  if (!(noise_var > 0.0)) throw InvalidParameter("plant: noise variance must be positive");
  if (y_ref.kind == Reference::Kind::sinusoid && !(y_ref.period > 0.0))
    throw InvalidParameter("plant: sinusoid reference needs a positive period");
}

double optimal_control(const LinearPlant& plant, double y_next) {
  if (plant.b == 0.0) throw InvalidParameter("optimal_control: b must be nonzero");
  return (y_next - plant.a * plant.x_hat) / plant.b;
}

LinearPlant advance_plant(const LinearPlant& plant, double v, double r) {
  LinearPlant next = plant;
  next.x = plant.a * plant.x + plant.b * v + r;
  next.x_pred = plant.a * plant.x_hat + plant.b * v;
  next.x_hat = next.x_pred;
  next.slot = plant.slot + 1;
  return next;
}

LinearPlant resolve_update(const LinearPlant& plant, bool updated) {
  LinearPlant next = plant;
  next.x_hat = updated ? plant.x : plant.x_pred;
  return next;
}

LinearPlant step_plant(const LinearPlant& plant, double v, bool updated, Stream& stream) {
  const double r = std::sqrt(plant.noise_var) * stream.normal(static_cast<std::uint64_t>(plant.slot));
  return resolve_update(advance_plant(plant, v, r), updated);
}

}  // namespace uoi
