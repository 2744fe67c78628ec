import setuptools, os

VERSION = '0.1.0.dev0'

# BEFORE importing setuptools, remove MANIFEST. Otherwise it may not be
# properly updated when the contents of directories change.
if os.path.exists('MANIFEST'):
    os.remove('MANIFEST')

def readme():
    with open('README.rst') as f:
        return f.read()

setuptools.setup(
    name='gamepl',
    version=VERSION,
    description='Partial-label multi-label learning as a two-player game',
    long_description=readme(),
    classifiers=[
      'License :: OSI Approved :: MIT License',
      'Programming Language :: Python',
      'Programming Language :: Python :: 3',
      'Intended Audience :: Science/Research',
      'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
    keywords='multi-label partial-label pseudo-label game classification mAP',
    setup_requires=['numpy'],
    install_requires=['numpy','xarray','scipy','pandas'],
    python_requires='>=3.8',
    license='MIT',
    packages=setuptools.find_packages(),
    entry_points={'console_scripts': ['gamepl=gamepl.cli:main']},
)
