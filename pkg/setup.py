import setuptools as setup


def get_version(pkg_path):
    """
    Load _version.py module without importing the whole package.
    """
    import os
    from importlib.util import module_from_spec, spec_from_file_location

    spec = spec_from_file_location('version', os.path.join(pkg_path, '_version.py'))
    module = module_from_spec(spec)
    spec.loader.exec_module(module)
    return module.__version__


def find_packages():
    return ['boostlab'] + ['boostlab.'+p for p in setup.find_packages('boostlab')]


setup.setup(
    name='boostlab',
    version=get_version(r'boostlab'),
    description='BoostLab: Stability and control laboratory for the DC-DC boost converter',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    license='MIT',

    packages=find_packages(),
    python_requires='>=3.8',
    install_requires=[
        'numpy',
        'scipy>=1.7',
        'matplotlib',
    ],
    extras_require={
        'tests': [
            'pytest',
            'hypothesis',
        ],
    },
    entry_points={
        'console_scripts': [
            'boostlab = boostlab._cli:main',
        ],
    },
)
