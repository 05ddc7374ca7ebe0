from django.conf import settings
from rest_framework import serializers

COMMANDS = [
    'gn-constant',
    'ground-state',
    'gamma-curve',
    'evolve',
    'global-existence',
    'instability',
    'concentration',
    'threshold',
]

# Commands whose workflow only exists at the critical exponent sigma*N = 4
CRITICAL_COMMANDS = ('gn-constant', 'threshold', 'concentration')


class PositiveFloatField(serializers.FloatField):
    """Float that must be strictly positive"""

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not value > 0:
            raise serializers.ValidationError("Ensure this value is greater than 0.")
        return value


class ModelSerializer(serializers.Serializer):
    """Serializer for model.* keys"""
    gamma = PositiveFloatField(required=False)
    sigma = PositiveFloatField()
    dim = serializers.ChoiceField(choices=[1, 2])
    mass = PositiveFloatField(required=False, allow_null=True, default=None)
    mass_factor = PositiveFloatField(required=False, allow_null=True, default=None)

    def validate(self, data):
        """Mass is given either absolutely or as a multiple of c_N*"""
        if data.get('mass') is not None and data.get('mass_factor') is not None:
            raise serializers.ValidationError("Give model.mass or model.mass_factor, not both")
        data.setdefault('gamma', settings.DEFAULT_GAMMA)
        if data['sigma'] * data['dim'] < 4.0 - 1e-12:
            raise serializers.ValidationError(
                {'sigma': f"sigma*N = {data['sigma'] * data['dim']:g} is below 4"}
            )
        return data


class GridSerializer(serializers.Serializer):
    """Serializer for grid.* keys; missing values default by dimension"""
    extent = PositiveFloatField(required=False)
    points = serializers.IntegerField(required=False, min_value=8)

    def validate_points(self, value):
        if value % 2 != 0:
            raise serializers.ValidationError("Number of points must be even")
        return value


class SolverSerializer(serializers.Serializer):
    """Serializer for solver.* keys"""
    max_iterations = serializers.IntegerField(required=False, min_value=1)
    residual_tolerance = PositiveFloatField(required=False)
    petviashvili_exponent = PositiveFloatField(required=False, allow_null=True, default=None)
    alpha_min = PositiveFloatField(required=False)
    alpha_max = PositiveFloatField(required=False)
    scan_points = serializers.IntegerField(required=False, min_value=2)
    seed_profile = serializers.ChoiceField(choices=['gaussian', 'checkpoint'], default='gaussian')
    seed_checkpoint = serializers.CharField(required=False, allow_null=True, default=None)

    def validate(self, data):
        data.setdefault('max_iterations', settings.SOLVER_MAX_ITERATIONS)
        data.setdefault('residual_tolerance', settings.SOLVER_RESIDUAL_TOLERANCE)
        data.setdefault('alpha_min', settings.ALPHA_BRACKET_MIN)
        data.setdefault('alpha_max', settings.ALPHA_BRACKET_MAX)
        data.setdefault('scan_points', settings.ALPHA_SCAN_POINTS)
        if data['alpha_min'] >= data['alpha_max']:
            raise serializers.ValidationError({'alpha_max': "Must exceed solver.alpha_min"})
        if data['seed_profile'] == 'checkpoint' and not data.get('seed_checkpoint'):
            raise serializers.ValidationError({'seed_checkpoint': "Required when seed_profile is checkpoint"})
        return data


class DynamicsSerializer(serializers.Serializer):
    """Serializer for dynamics.* keys"""
    horizon = PositiveFloatField(default=50.0)
    tau = PositiveFloatField(required=False, allow_null=True, default=None)
    virial_radius = PositiveFloatField(required=False, allow_null=True, default=None)
    output_interval = PositiveFloatField(required=False, allow_null=True, default=None)
    lambda_global = PositiveFloatField(default=0.5)
    lambda_perturb = PositiveFloatField(default=1.05)
    growth_factor = PositiveFloatField(required=False)
    tail_fraction = PositiveFloatField(required=False)
    max_restarts = serializers.IntegerField(default=1, min_value=0)
    initial_checkpoint = serializers.CharField(required=False, allow_null=True, default=None)

    def validate(self, data):
        data.setdefault('growth_factor', settings.BLOWUP_GROWTH_FACTOR)
        data.setdefault('tail_fraction', settings.RESOLUTION_TAIL_FRACTION)
        if data['lambda_global'] >= 1.0:
            raise serializers.ValidationError({'lambda_global': "Must be below 1"})
        if data['lambda_perturb'] <= 1.0:
            raise serializers.ValidationError({'lambda_perturb': "Must exceed 1"})
        return data


class SweepSerializer(serializers.Serializer):
    """Serializer for sweep.* keys"""
    masses = serializers.ListField(child=PositiveFloatField(), required=False, allow_null=True, default=None)
    mass_factors = serializers.ListField(child=PositiveFloatField(), required=False, allow_null=True, default=None)
    n_max = serializers.IntegerField(default=4, min_value=3)
    certify_samples = serializers.IntegerField(default=200, min_value=0)
    threshold_samples = serializers.IntegerField(default=100, min_value=1)

    def validate(self, data):
        for key in ('masses', 'mass_factors'):
            values = data.get(key)
            if values is not None and any(b <= a for a, b in zip(values, values[1:])):
                raise serializers.ValidationError({key: "Must be strictly ascending"})
        if data.get('masses') is not None and data.get('mass_factors') is not None:
            raise serializers.ValidationError("Give sweep.masses or sweep.mass_factors, not both")
        return data


class RunConfigSerializer(serializers.Serializer):
    """Serializer for a whole run configuration document"""
    command = serializers.ChoiceField(choices=COMMANDS)
    model = ModelSerializer()
    grid = GridSerializer(required=False, default=dict)
    solver = SolverSerializer(required=False, default=dict)
    dynamics = DynamicsSerializer(required=False, default=dict)
    sweep = SweepSerializer(required=False, default=dict)
    output_dir = serializers.CharField(required=False, allow_null=True, default=None)
    rng_seed = serializers.IntegerField(required=False, min_value=0, max_value=2 ** 64 - 1)

    def validate(self, data):
        model = data['model']
        data.setdefault('rng_seed', settings.RANDOM_FIELD_SEED)
        grid = dict(data.get('grid') or {})
        if model['dim'] == 1:
            grid.setdefault('extent', settings.DEFAULT_EXTENT_1D)
            grid.setdefault('points', settings.DEFAULT_POINTS_1D)
        else:
            grid.setdefault('extent', settings.DEFAULT_EXTENT_2D)
            grid.setdefault('points', settings.DEFAULT_POINTS_2D)
        data['grid'] = grid
        for section, serializer in (('solver', SolverSerializer), ('dynamics', DynamicsSerializer), ('sweep', SweepSerializer)):
            if not data.get(section):
                nested = serializer(data={})
                nested.is_valid(raise_exception=True)
                data[section] = dict(nested.validated_data)

        critical = abs(model['sigma'] * model['dim'] - 4.0) <= 1e-12
        if data['command'] in CRITICAL_COMMANDS and not critical:
            raise serializers.ValidationError(
                {'command': f"{data['command']} needs sigma*N = 4"}
            )
        needs_mass = ('ground-state', 'evolve', 'global-existence', 'instability')
        if data['command'] in needs_mass and model.get('mass') is None and model.get('mass_factor') is None:
            if not (data['command'] == 'evolve' and data['dynamics'].get('initial_checkpoint')):
                raise serializers.ValidationError({'model': f"{data['command']} needs model.mass or model.mass_factor"})
        if model.get('mass_factor') is not None and not critical:
            raise serializers.ValidationError({'model': "model.mass_factor is a multiple of c_N* and needs sigma*N = 4"})
        if data['command'] == 'gamma-curve':
            sweep = data['sweep']
            if sweep.get('masses') is None and sweep.get('mass_factors') is None:
                raise serializers.ValidationError({'sweep': "gamma-curve needs sweep.masses or sweep.mass_factors"})
            if sweep.get('mass_factors') is not None and not critical:
                raise serializers.ValidationError({'sweep': "sweep.mass_factors needs sigma*N = 4"})
        return data
